"""Adaptive multi-level cascade: run fusion levels in order of increasing
cost and stop as soon as the decision margin clears the level's threshold.

Threshold calibration is a two-step procedure on the validation set: first
the observed margin range of each level is measured (fusion only), then the
threshold combination maximizing validation accuracy is picked by grid
search over those ranges, with ties broken by lower cascade cost and then by
lexicographically larger thresholds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .cost import cost_amlf
from .imaging import GrayImage
from .slf import SlfLevelModel, slf_classify

if TYPE_CHECKING:  # pragma: no cover
    from .cost import CostLedger


def margin(probs) -> float:
    """Top-1 minus top-2 probability; 0 when the two best classes tie."""
    values = np.asarray(probs, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("margin requires at least two class probabilities")
    top_two = np.partition(values, values.size - 2)[-2:]
    return float(top_two[1] - top_two[0])


@dataclass(frozen=True)
class MarginRange:
    """Minimum and maximum margin observed at one level on a validation set."""

    level: int
    low: float
    high: float

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if not 0.0 <= self.low <= self.high <= 1.0 + 1e-12:
            raise ValueError("margin range must satisfy 0 <= low <= high <= 1")


@dataclass(frozen=True)
class CascadeResult:
    """Outcome of one cascade run: the decision, where it exited, and the
    margin observed at every visited level."""

    decision: int
    exit_level: int
    margins: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.exit_level < 1 or len(self.margins) != self.exit_level:
            raise ValueError("one margin per visited level is required")


@dataclass(frozen=True)
class AmlfModel:
    """A stack of per-level fusion models plus calibrated exit thresholds."""

    levels: tuple[SlfLevelModel, ...]
    thresholds: tuple[float, ...]
    margin_ranges: tuple[MarginRange, ...] = ()

    def __post_init__(self) -> None:
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("at least one level is required")
        for index, level_model in enumerate(levels):
            if level_model.level != index + 1:
                raise ValueError("levels must be ordered 1..level_max")
        thresholds = tuple(float(t) for t in self.thresholds)
        if len(thresholds) != len(levels) - 1:
            raise ValueError("one threshold per level below the last is required")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "margin_ranges", tuple(self.margin_ranges))

    @property
    def level_max(self) -> int:
        return len(self.levels)


def amlf_classify(
    image: GrayImage,
    model: AmlfModel,
    rule: str = "mean",
    ledger: "CostLedger | None" = None,
) -> CascadeResult:
    """Run the cascade on one image.

    Levels are evaluated in order; the cascade exits at the first level whose
    margin reaches its threshold, or unconditionally at the last level. The
    decision is the argmax of the exiting level's probabilities (ties go to
    the lowest class index). All visited levels' costs land on the ledger,
    which also records the exit level.
    """
    margins: list[float] = []
    for index, level_model in enumerate(model.levels):
        level = index + 1
        probs = slf_classify(image, level_model, rule, ledger)
        level_margin = margin(probs)
        margins.append(level_margin)
        is_last = level == model.level_max
        if is_last or level_margin >= model.thresholds[index]:
            if ledger is not None:
                ledger.record_exit(level)
            return CascadeResult(
                decision=int(np.argmax(probs)),
                exit_level=level,
                margins=tuple(margins),
            )
    raise AssertionError("unreachable: the last level always exits")


def margin_range(
    images: Sequence[GrayImage],
    level: int,
    model: AmlfModel,
    rule: str = "mean",
) -> MarginRange:
    """Observed margin extremes of one level over a validation set."""
    if not images:
        raise ValueError("margin_range requires a non-empty sample set")
    if not 1 <= level <= model.level_max:
        raise ValueError(f"level {level} outside 1..{model.level_max}")
    values = [margin(slf_classify(img, model.levels[level - 1], rule)) for img in images]
    return MarginRange(level=level, low=min(values), high=max(values))


@dataclass(frozen=True)
class CalibrationResult:
    thresholds: tuple[float, ...]
    margin_ranges: tuple[MarginRange, ...]
    accuracy: float
    classification_cost: int


def calibrate_thresholds(
    samples: Sequence[tuple[GrayImage, int]],
    model: AmlfModel,
    grid_steps: int = 10,
    rule: str = "mean",
) -> CalibrationResult:
    """Pick exit thresholds by exhaustive grid search on a validation set.

    Each level below the last contributes ``grid_steps`` equally spaced
    candidates spanning its observed margin range (inclusive). Every
    combination is scored for validation accuracy; per-level fusion outputs
    are computed once per sample and reused across the whole grid, so the
    search is exhaustive but cheap. The model should hold classifiers fit on
    the training split only, so the validation set stays unseen.
    """
    if not samples:
        raise ValueError("calibration requires a non-empty validation set")
    if grid_steps < 2:
        raise ValueError("grid_steps must be >= 2")
    level_max = model.level_max
    count = len(samples)
    margins = np.empty((count, level_max))
    predictions = np.empty((count, level_max), dtype=np.int64)
    labels = np.empty(count, dtype=np.int64)
    for s, (image, label) in enumerate(samples):
        labels[s] = label
        for index, level_model in enumerate(model.levels):
            probs = slf_classify(image, level_model, rule)
            margins[s, index] = margin(probs)
            predictions[s, index] = int(np.argmax(probs))
    ranges = tuple(
        MarginRange(
            level=index + 1,
            low=float(margins[:, index].min()),
            high=float(margins[:, index].max()),
        )
        for index in range(level_max)
    )
    gamma_of_level = {
        index + 1: tuple(clf.gamma_cost for clf in level_model.classifiers)
        for index, level_model in enumerate(model.levels)
    }
    set_count = len(model.levels[0].feature_sets)

    def _score(thresholds: tuple[float, ...]) -> tuple[float, int]:
        gate = margins[:, : level_max - 1] >= np.asarray(thresholds).reshape(1, -1)
        if gate.shape[1] == 0:
            exit_index = np.full(count, level_max - 1, dtype=np.int64)
        else:
            exited = gate.any(axis=1)
            exit_index = np.where(exited, gate.argmax(axis=1), level_max - 1)
        chosen = predictions[np.arange(count), exit_index]
        accuracy = float(np.mean(chosen == labels))
        exit_counts = {
            level + 1: int(n)
            for level, n in enumerate(np.bincount(exit_index, minlength=level_max))
            if n
        }
        cascade_cost = cost_amlf(exit_counts, gamma_of_level, set_count)
        return accuracy, cascade_cost

    if level_max == 1:
        accuracy, cascade_cost = _score(())
        return CalibrationResult((), ranges, accuracy, cascade_cost)

    candidates = [
        np.linspace(ranges[index].low, ranges[index].high, grid_steps)
        for index in range(level_max - 1)
    ]
    best: tuple[float, int, tuple[float, ...]] | None = None
    for combo in itertools.product(*candidates):
        thresholds = tuple(float(t) for t in combo)
        accuracy, cascade_cost = _score(thresholds)
        if best is None or _prefer_combo(accuracy, cascade_cost, thresholds, best):
            best = (accuracy, cascade_cost, thresholds)
    accuracy, cascade_cost, thresholds = best
    return CalibrationResult(thresholds, ranges, accuracy, cascade_cost)


def _prefer_combo(
    accuracy: float,
    cascade_cost: int,
    thresholds: tuple[float, ...],
    best: tuple[float, int, tuple[float, ...]],
) -> bool:
    best_accuracy, best_cost, best_thresholds = best
    if accuracy != best_accuracy:
        return accuracy > best_accuracy
    if cascade_cost != best_cost:
        return cascade_cost < best_cost
    return thresholds > best_thresholds
