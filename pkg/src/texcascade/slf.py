"""Single-level fusion: classify every patch x feature-set vector at one grid
level and combine the scores into one probability vector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .features import FeatureSetDescriptor, extract
from .imaging import GrayImage, split_patches

if TYPE_CHECKING:  # pragma: no cover
    from .cost import CostLedger

FUSION_RULES = ("mean", "product", "max")


@dataclass(frozen=True)
class SlfLevelModel:
    """The classifiers of one grid level, one per feature set."""

    level: int
    feature_sets: tuple[FeatureSetDescriptor, ...]
    classifiers: tuple

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if len(self.feature_sets) == 0:
            raise ValueError("at least one feature set is required")
        if len(self.classifiers) != len(self.feature_sets):
            raise ValueError("one classifier per feature set is required")
        counts = {clf.class_count for clf in self.classifiers}
        if len(counts) > 1:
            raise ValueError("all classifiers must share the same class count")

    @property
    def class_count(self) -> int:
        return int(self.classifiers[0].class_count)


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """All per-patch, per-feature-set score vectors of one classification."""

    scores: np.ndarray  # (patch_count * set_count, class_count)
    patch_count: int
    set_count: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.scores, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("scores must be a non-empty 2-D array")
        if arr.shape[0] != self.patch_count * self.set_count:
            raise ValueError("score count must equal patch_count * set_count")
        object.__setattr__(self, "scores", arr)


def fuse(scores, rule: str = "mean") -> np.ndarray:
    """Combine score vectors into one probability vector.

    ``mean`` averages the vectors; ``product`` and ``max`` apply the
    element-wise rule and renormalize. A product that collapses to all zeros
    falls back to the uniform distribution.
    """
    matrix = scores.scores if isinstance(scores, ScoreSet) else np.asarray(scores, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError("cannot fuse an empty score set")
    if rule == "mean":
        return matrix.mean(axis=0)
    if rule == "product":
        combined = matrix.prod(axis=0)
        total = combined.sum()
        if total <= 0.0:
            return np.full(matrix.shape[1], 1.0 / matrix.shape[1])
        return combined / total
    if rule == "max":
        combined = matrix.max(axis=0)
        return combined / combined.sum()
    raise ValueError(f"unknown fusion rule {rule!r}; expected one of {FUSION_RULES}")


def slf_classify(
    image: GrayImage,
    model: SlfLevelModel,
    rule: str = "mean",
    ledger: "CostLedger | None" = None,
) -> np.ndarray:
    """Classify one image at the model's grid level.

    The image is split into the level's patch grid; every patch is described
    by every feature set and scored by the matching classifier. The ledger,
    when given, is charged for each extraction and for each classifier call
    weighted by that classifier's cost.
    """
    grid = split_patches(image, model.level)
    vectors = []
    for patch in grid.patches:
        for descriptor, clf in zip(model.feature_sets, model.classifiers):
            fv = extract(patch, descriptor.set_id, ledger)
            probs = clf.classify(fv)
            if ledger is not None:
                ledger.record_classification(clf.gamma_cost, int(fv.values.size))
            vectors.append(np.asarray(probs, dtype=np.float64))
    score_set = ScoreSet(
        scores=np.vstack(vectors),
        patch_count=grid.patch_count,
        set_count=len(model.feature_sets),
    )
    return fuse(score_set, rule)
