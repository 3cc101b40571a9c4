"""Exact operation-count cost accounting.

The ledger counts what an engine run actually did (classifier calls weighted
by classifier cost, pixel-filter operations, cascade exit levels). The pure
evaluators compute the analytic counterparts: classification-only cost,
per-level fusion cost, cascade cost, feature cost under resolution scaling,
and global cost combining both with vector dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .imaging import grid_count


@dataclass
class CostLedger:
    """Mergeable counters for one or more recognition runs.

    classifier_ops accumulates one classifier-cost unit per call (the
    support-vector count of the classifier used); classifier_dim_ops weighs
    each call additionally by the input dimension, the unit used for global
    cost. feature_pixels / feature_ops count processed pixels and
    pixels-times-window filter operations.
    """

    classifier_calls: int = 0
    classifier_ops: int = 0
    classifier_dim_ops: int = 0
    feature_pixels: int = 0
    feature_ops: int = 0
    samples: int = 0
    exit_counts: dict[int, int] = field(default_factory=dict)

    def record_classification(self, gamma_cost: int, dim: int) -> None:
        if gamma_cost < 0 or dim < 1:
            raise ValueError("classifier cost must be >= 0 and dimension >= 1")
        self.classifier_calls += 1
        self.classifier_ops += gamma_cost
        self.classifier_dim_ops += gamma_cost * dim

    def record_extraction(self, pixels: int, window: int) -> None:
        if pixels < 1 or window < 1:
            raise ValueError("pixels and window must be >= 1")
        self.feature_pixels += pixels
        self.feature_ops += pixels * window

    def record_exit(self, level: int) -> None:
        if level < 1:
            raise ValueError("exit level must be >= 1")
        self.exit_counts[level] = self.exit_counts.get(level, 0) + 1
        self.samples += 1

    def record_sample(self) -> None:
        self.samples += 1


def merge(*ledgers: CostLedger) -> CostLedger:
    """Field-wise sum of ledgers; associative and commutative."""
    total = CostLedger()
    for ledger in ledgers:
        total.classifier_calls += ledger.classifier_calls
        total.classifier_ops += ledger.classifier_ops
        total.classifier_dim_ops += ledger.classifier_dim_ops
        total.feature_pixels += ledger.feature_pixels
        total.feature_ops += ledger.feature_ops
        total.samples += ledger.samples
        for level, count in ledger.exit_counts.items():
            total.exit_counts[level] = total.exit_counts.get(level, 0) + count
    return total


def _per_set(value, count: int, name: str) -> tuple:
    """Broadcast a scalar to ``count`` feature sets, or validate a sequence."""
    if isinstance(value, (int, float)):
        return (value,) * count
    seq = tuple(value)
    if len(seq) != count:
        raise ValueError(f"{name} must have one entry per feature set")
    return seq


def cost_classification(ledger: CostLedger) -> int:
    """Total classification cost of a run: sum of calls weighted by classifier cost."""
    return ledger.classifier_ops


def cost_slf(sample_count: int, level: int, gamma_cost, feature_sets: int = 1):
    """Classification cost of single-level fusion over a test set.

    ``gamma_cost`` is the per-classifier cost weight; pass a sequence to give
    each feature set its own weight, or a scalar shared by all sets.
    """
    if sample_count < 0:
        raise ValueError("sample count must be >= 0")
    if feature_sets < 1:
        raise ValueError("feature set count must be >= 1")
    gammas = _per_set(gamma_cost, feature_sets, "gamma_cost")
    return sample_count * grid_count(level) * sum(gammas)


def cost_amlf(
    exit_counts: Mapping[int, int],
    gamma_of_level: Mapping[int, object],
    feature_sets: int = 1,
):
    """Classification cost of the cascade: every exiting sample pays for all
    levels it visited.

    ``exit_counts`` maps exit level -> sample count; ``gamma_of_level`` maps
    level -> classifier cost (scalar, or one entry per feature set).
    """
    if feature_sets < 1:
        raise ValueError("feature set count must be >= 1")
    if not exit_counts:
        return 0
    top = max(exit_counts)
    per_level = {}
    for level in range(1, top + 1):
        if level not in gamma_of_level:
            raise ValueError(f"gamma_of_level missing level {level}")
        gammas = _per_set(gamma_of_level[level], feature_sets, "gamma_of_level")
        per_level[level] = grid_count(level) * sum(gammas)
    total = 0
    for exit_level, count in exit_counts.items():
        if count < 0:
            raise ValueError("exit counts must be >= 0")
        total += count * sum(per_level[l] for l in range(1, exit_level + 1))
    return total


def cost_feature(scale: float, pixels: int, window: int = 1) -> float:
    """Feature-extraction cost under resolution scaling: scale * pixels * window."""
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"scale must lie in (0, 1], got {scale}")
    if pixels < 1 or window < 1:
        raise ValueError("pixels and window must be >= 1")
    return scale * (pixels * window)


def cost_c(level: int, gamma_cost, dim):
    """Per-sample classification cost with vector dimension folded in.

    Both ``gamma_cost`` and ``dim`` may be scalars or parallel per-feature-set
    sequences; the per-set products are summed.
    """
    if isinstance(gamma_cost, (int, float)) and isinstance(dim, (int, float)):
        pairs = ((gamma_cost, dim),)
    else:
        count = len(dim) if not isinstance(dim, (int, float)) else len(gamma_cost)
        gammas = _per_set(gamma_cost, count, "gamma_cost")
        dims = _per_set(dim, count, "dim")
        pairs = tuple(zip(gammas, dims))
    return grid_count(level) * sum(g * d for g, d in pairs)


@dataclass(frozen=True)
class CostParams:
    """Analytic cost inputs for one experiment configuration.

    ``pixels`` is the pixel count of the original (unscaled) image; ``gammas``
    maps each level to the per-feature-set classifier cost weights, parallel
    to ``windows`` and ``dims``.
    """

    pixels: int
    scale: float
    windows: tuple[int, ...]
    dims: tuple[int, ...]
    gammas: Mapping[int, tuple]

    def __post_init__(self) -> None:
        if self.pixels < 1:
            raise ValueError("pixels must be >= 1")
        if not 0.0 < self.scale <= 1.0:
            raise ValueError(f"scale must lie in (0, 1], got {self.scale}")
        windows = tuple(self.windows)
        dims = tuple(self.dims)
        if not windows or len(windows) != len(dims):
            raise ValueError("windows and dims must be non-empty and parallel")
        if any(w < 1 for w in windows) or any(d < 1 for d in dims):
            raise ValueError("windows and dims must be >= 1")
        gammas = {
            level: _per_set(value, len(windows), "gammas")
            for level, value in self.gammas.items()
        }
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "gammas", gammas)

    @property
    def feature_set_count(self) -> int:
        return len(self.windows)

    @classmethod
    def for_feature_sets(
        cls,
        descriptors: Sequence,
        gammas: Mapping[int, object],
        pixels: int,
        scale: float,
    ) -> "CostParams":
        """Build params from descriptor objects exposing .window and .dim."""
        return cls(
            pixels=pixels,
            scale=scale,
            windows=tuple(d.window for d in descriptors),
            dims=tuple(d.dim for d in descriptors),
            gammas=dict(gammas),
        )

    def feature_cost(self) -> float:
        """Per-sample, per-level feature cost: one extraction per feature set."""
        return sum(cost_feature(self.scale, self.pixels, w) for w in self.windows)

    def classification_cost(self, level: int) -> float:
        return cost_c(level, self.gammas[level], self.dims)


def global_slf(sample_count: int, level: int, params: CostParams) -> float:
    """Global (feature + classification) cost of single-level fusion."""
    if sample_count < 0:
        raise ValueError("sample count must be >= 0")
    return sample_count * (params.feature_cost() + params.classification_cost(level))


def global_amlf(exit_counts: Mapping[int, int], params: CostParams) -> float:
    """Global cost of the cascade: per exit level, the feature and
    classification cost of every visited level."""
    if not exit_counts:
        return 0.0
    top = max(exit_counts)
    fcost = params.feature_cost()
    per_level = {l: fcost + params.classification_cost(l) for l in range(1, top + 1)}
    total = 0.0
    for exit_level, count in exit_counts.items():
        if count < 0:
            raise ValueError("exit counts must be >= 0")
        total += count * sum(per_level[l] for l in range(1, exit_level + 1))
    return total
