"""Multiclass Gaussian-kernel SVM trained by sequential minimal optimization.

Training solves each one-vs-one subproblem with a deterministic
maximal-violating-pair SMO (the pair of box-feasible points with the largest
KKT gap is updated each iteration, stopping when the gap drops below the
tolerance). Probability-like outputs are normalized one-vs-one votes.

The classifier cost weight exposed as ``gamma_cost`` is the number of
distinct support vectors across all pairwise machines: shared vectors incur
one kernel evaluation each at inference, so that count is the per-call cost.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .features import FeatureVector

logger = logging.getLogger(__name__)

SMO_TOLERANCE = 1e-3
_SV_EPS = 1e-8


@dataclass(frozen=True, eq=False)
class NormalizationStats:
    """Per-attribute min/max of the fitting data, for scaling to [-1, +1]."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        mins = np.asarray(self.mins, dtype=np.float64)
        maxs = np.asarray(self.maxs, dtype=np.float64)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ValueError("mins and maxs must be parallel 1-D arrays")
        if np.any(mins > maxs):
            raise ValueError("per-attribute min must not exceed max")
        mins.setflags(write=False)
        maxs.setflags(write=False)
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def dim(self) -> int:
        return int(self.mins.size)

    @classmethod
    def from_data(cls, data: np.ndarray) -> "NormalizationStats":
        data = np.asarray(data, dtype=np.float64)
        return cls(data.min(axis=0), data.max(axis=0))

    def transform(self, values: np.ndarray) -> np.ndarray:
        """Map attributes linearly to [-1, +1], clamping out-of-range values.

        Attributes that were constant in the fitting data map to 0.
        """
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != self.dim:
            raise ValueError(
                f"dimension mismatch: expected {self.dim}, got {values.shape[-1]}"
            )
        span = self.maxs - self.mins
        out = np.zeros_like(values)
        nonzero = span > 0
        shifted = values[..., nonzero] - self.mins[nonzero]
        out[..., nonzero] = 2.0 * shifted / span[nonzero] - 1.0
        return np.clip(out, -1.0, 1.0)


def normalize(fv, stats: NormalizationStats) -> np.ndarray:
    """Scale a feature vector to [-1, +1] using training min/max."""
    values = fv.values if isinstance(fv, FeatureVector) else np.asarray(fv)
    if values.ndim != 1:
        raise ValueError("expected a single feature vector")
    return stats.transform(values)


@dataclass(frozen=True)
class PairwiseMachine:
    """One binary machine of the one-vs-one decomposition.

    Decision value >= 0 votes for ``first``, otherwise ``second``. ``sv_rows``
    index into the model's shared support-vector matrix.
    """

    first: int
    second: int
    sv_rows: np.ndarray
    dual_coef: np.ndarray
    intercept: float


@dataclass(frozen=True)
class KernelClassifier:
    class_count: int
    penalty: float
    kernel_gamma: float
    norm_stats: NormalizationStats
    support_vectors: np.ndarray  # (n_sv, dim), already normalized
    machines: tuple[PairwiseMachine, ...]

    @property
    def dim(self) -> int:
        return int(self.support_vectors.shape[1])

    @property
    def gamma_cost(self) -> int:
        """Classifier cost weight: count of distinct support vectors."""
        return int(self.support_vectors.shape[0])

    def classify(self, fv) -> np.ndarray:
        """Probability-like scores from normalized one-vs-one votes."""
        vec = normalize(fv, self.norm_stats)
        sq_dist = np.sum((self.support_vectors - vec) ** 2, axis=1)
        kernel_row = np.exp(-self.kernel_gamma * sq_dist)
        votes = np.zeros(self.class_count, dtype=np.float64)
        for machine in self.machines:
            value = float(machine.dual_coef @ kernel_row[machine.sv_rows])
            value += machine.intercept
            votes[machine.first if value >= 0.0 else machine.second] += 1.0
        return votes / votes.sum()

    def predict(self, fv) -> int:
        return int(np.argmax(self.classify(fv)))

    def to_dict(self) -> dict:
        return {
            "class_count": self.class_count,
            "penalty": float(self.penalty),
            "kernel_gamma": float(self.kernel_gamma),
            "gamma_cost": self.gamma_cost,
            "norm_min": [float(v) for v in self.norm_stats.mins],
            "norm_max": [float(v) for v in self.norm_stats.maxs],
            "support_vectors": [[float(v) for v in row] for row in self.support_vectors],
            "machines": [
                {
                    "first": m.first,
                    "second": m.second,
                    "sv_rows": [int(i) for i in m.sv_rows],
                    "dual_coef": [float(c) for c in m.dual_coef],
                    "intercept": float(m.intercept),
                }
                for m in self.machines
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KernelClassifier":
        machines = tuple(
            PairwiseMachine(
                first=int(m["first"]),
                second=int(m["second"]),
                sv_rows=np.asarray(m["sv_rows"], dtype=np.int64),
                dual_coef=np.asarray(m["dual_coef"], dtype=np.float64),
                intercept=float(m["intercept"]),
            )
            for m in data["machines"]
        )
        model = cls(
            class_count=int(data["class_count"]),
            penalty=float(data["penalty"]),
            kernel_gamma=float(data["kernel_gamma"]),
            norm_stats=NormalizationStats(
                np.asarray(data["norm_min"], dtype=np.float64),
                np.asarray(data["norm_max"], dtype=np.float64),
            ),
            support_vectors=np.asarray(data["support_vectors"], dtype=np.float64),
            machines=machines,
        )
        if "gamma_cost" in data and int(data["gamma_cost"]) != model.gamma_cost:
            raise ValueError("corrupt model: stored cost weight disagrees with the support vectors")
        return model


def gamma_cost(model: KernelClassifier) -> int:
    """Distinct support-vector count of a trained model."""
    return model.gamma_cost


def _solve_pair(
    kernel: np.ndarray,
    labels_pm: np.ndarray,
    penalty: float,
    tol: float = SMO_TOLERANCE,
    max_iter: int = 0,
) -> tuple[np.ndarray, float]:
    """Solve one soft-margin binary subproblem by maximal-violating-pair SMO.

    Minimizes 0.5 a'Qa - e'a subject to y'a = 0 and 0 <= a <= C, where
    Q = yy' * K. Returns the dual coefficients and the intercept.
    """
    n = labels_pm.size
    y = labels_pm.astype(np.float64)
    q = kernel * np.outer(y, y)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    if max_iter <= 0:
        max_iter = max(20_000, 200 * n)
    converged = False
    for _ in range(max_iter):
        neg_yg = -y * grad
        can_up = ((y > 0) & (alpha < penalty - _SV_EPS)) | ((y < 0) & (alpha > _SV_EPS))
        can_dn = ((y < 0) & (alpha < penalty - _SV_EPS)) | ((y > 0) & (alpha > _SV_EPS))
        if not can_up.any() or not can_dn.any():
            converged = True
            break
        i = int(np.argmax(np.where(can_up, neg_yg, -np.inf)))
        j = int(np.argmin(np.where(can_dn, neg_yg, np.inf)))
        gap = neg_yg[i] - neg_yg[j]
        if gap < tol:
            converged = True
            break
        quad = q[i, i] + q[j, j] - 2.0 * y[i] * y[j] * q[i, j]
        if quad <= 0.0:
            quad = 1e-12
        step = gap / quad
        old_i, old_j = alpha[i], alpha[j]
        pair_sum = y[i] * old_i + y[j] * old_j
        new_i = min(max(old_i + y[i] * step, 0.0), penalty)
        new_j = min(max(y[j] * (pair_sum - y[i] * new_i), 0.0), penalty)
        new_i = min(max(y[i] * (pair_sum - y[j] * new_j), 0.0), penalty)
        alpha[i], alpha[j] = new_i, new_j
        grad += q[:, i] * (new_i - old_i) + q[:, j] * (new_j - old_j)
    if not converged:
        logger.debug("SMO stopped at the %d-iteration bound for n=%d", max_iter, n)
    neg_yg = -y * grad
    free = (alpha > _SV_EPS) & (alpha < penalty - _SV_EPS)
    if free.any():
        intercept = float(np.mean(neg_yg[free]))
    else:
        can_up = ((y > 0) & (alpha < penalty - _SV_EPS)) | ((y < 0) & (alpha > _SV_EPS))
        can_dn = ((y < 0) & (alpha < penalty - _SV_EPS)) | ((y > 0) & (alpha > _SV_EPS))
        hi = np.max(neg_yg[can_up]) if can_up.any() else 0.0
        lo = np.min(neg_yg[can_dn]) if can_dn.any() else 0.0
        intercept = float((hi + lo) / 2.0)
    return alpha, intercept


@dataclass(frozen=True)
class _RawMachine:
    """Pairwise solution with support rows indexed into the full fitting set."""

    first: int
    second: int
    rows: np.ndarray
    dual_coef: np.ndarray
    intercept: float


def _squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)


def _fit_machines(
    kernel: np.ndarray,
    labels: np.ndarray,
    classes: np.ndarray,
    penalty: float,
) -> list[_RawMachine]:
    machines = []
    for a, b in itertools.combinations(range(classes.size), 2):
        mask = (labels == classes[a]) | (labels == classes[b])
        rows = np.flatnonzero(mask)
        y = np.where(labels[rows] == classes[a], 1.0, -1.0)
        sub_kernel = kernel[np.ix_(rows, rows)]
        alpha, intercept = _solve_pair(sub_kernel, y, penalty)
        sv = alpha > _SV_EPS
        machines.append(
            _RawMachine(
                first=a,
                second=b,
                rows=rows[sv],
                dual_coef=alpha[sv] * y[sv],
                intercept=intercept,
            )
        )
    return machines


def _votes(kernel_cross: np.ndarray, machines: list[_RawMachine], class_count: int) -> np.ndarray:
    """Vote matrix (n_eval, class_count) from pairwise decisions."""
    votes = np.zeros((kernel_cross.shape[0], class_count))
    for m in machines:
        values = kernel_cross[:, m.rows] @ m.dual_coef + m.intercept
        winner = np.where(values >= 0.0, m.first, m.second)
        votes[np.arange(votes.shape[0]), winner] += 1.0
    return votes


def _check_training_inputs(vectors: np.ndarray, labels: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(labels)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise ValueError("training data must be a non-empty 2-D array")
    if labels.shape != (vectors.shape[0],):
        raise ValueError("labels must parallel the training vectors")
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("training data must contain at least two classes")
    return classes


def fit_svm(
    vectors: np.ndarray,
    labels: np.ndarray,
    penalty: float,
    kernel_gamma: float,
    seed: int = 0,
) -> KernelClassifier:
    """Fit a one-vs-one RBF SVM at fixed hyperparameters.

    Attribute normalization statistics are computed from the given data. The
    solver is fully deterministic; ``seed`` is accepted for interface
    stability but not consumed.
    """
    del seed
    vectors = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(labels)
    classes = _check_training_inputs(vectors, labels)
    if penalty <= 0 or kernel_gamma <= 0:
        raise ValueError("penalty and kernel_gamma must be positive")
    stats = NormalizationStats.from_data(vectors)
    scaled = stats.transform(vectors)
    kernel = np.exp(-kernel_gamma * _squared_distances(scaled, scaled))
    raw = _fit_machines(kernel, labels, classes, penalty)
    sv_rows = sorted(set(int(i) for m in raw for i in m.rows))
    row_of = {global_row: local for local, global_row in enumerate(sv_rows)}
    machines = tuple(
        PairwiseMachine(
            first=m.first,
            second=m.second,
            sv_rows=np.asarray([row_of[int(i)] for i in m.rows], dtype=np.int64),
            dual_coef=m.dual_coef.copy(),
            intercept=m.intercept,
        )
        for m in raw
    )
    return KernelClassifier(
        class_count=int(classes.size),
        penalty=float(penalty),
        kernel_gamma=float(kernel_gamma),
        norm_stats=stats,
        support_vectors=scaled[sv_rows],
        machines=machines,
    )


@dataclass(frozen=True)
class GridSearchResult:
    penalty: float
    kernel_gamma: float
    accuracy: float


def grid_search(
    train_vectors: np.ndarray,
    train_labels: np.ndarray,
    val_vectors: np.ndarray,
    val_labels: np.ndarray,
    grid_penalty,
    grid_kernel_gamma,
    seed: int = 0,
) -> GridSearchResult:
    """Hold-out hyperparameter search over the (C, kernel width) grid.

    Every cell is fit on the training vectors and scored on the validation
    vectors; the most accurate cell wins, ties broken by smaller penalty and
    then smaller kernel width.
    """
    del seed
    train_vectors = np.asarray(train_vectors, dtype=np.float64)
    val_vectors = np.asarray(val_vectors, dtype=np.float64)
    train_labels = np.asarray(train_labels)
    val_labels = np.asarray(val_labels)
    classes = _check_training_inputs(train_vectors, train_labels)
    if val_vectors.ndim != 2 or val_vectors.shape[0] == 0:
        raise ValueError("validation data must be a non-empty 2-D array")
    grid_penalty = tuple(grid_penalty)
    grid_kernel_gamma = tuple(grid_kernel_gamma)
    if not grid_penalty or not grid_kernel_gamma:
        raise ValueError("hyperparameter grids must be non-empty")

    stats = NormalizationStats.from_data(train_vectors)
    train_scaled = stats.transform(train_vectors)
    val_scaled = stats.transform(val_vectors)
    train_sq = _squared_distances(train_scaled, train_scaled)
    cross_sq = _squared_distances(val_scaled, train_scaled)
    class_index = {c: i for i, c in enumerate(classes)}
    val_ids = np.asarray([class_index.get(label, -1) for label in val_labels])

    best: GridSearchResult | None = None
    for kernel_gamma in grid_kernel_gamma:
        kernel = np.exp(-kernel_gamma * train_sq)
        cross = np.exp(-kernel_gamma * cross_sq)
        for penalty in grid_penalty:
            machines = _fit_machines(kernel, train_labels, classes, penalty)
            predictions = np.argmax(_votes(cross, machines, classes.size), axis=1)
            accuracy = float(np.mean(predictions == val_ids))
            candidate = GridSearchResult(float(penalty), float(kernel_gamma), accuracy)
            if best is None or _prefer(candidate, best):
                best = candidate
    assert best is not None
    return best


def _prefer(candidate: GridSearchResult, best: GridSearchResult) -> bool:
    if candidate.accuracy != best.accuracy:
        return candidate.accuracy > best.accuracy
    if candidate.penalty != best.penalty:
        return candidate.penalty < best.penalty
    return candidate.kernel_gamma < best.kernel_gamma


def train(
    train_vectors: np.ndarray,
    train_labels: np.ndarray,
    val_vectors: np.ndarray,
    val_labels: np.ndarray,
    grid_penalty,
    grid_kernel_gamma,
    seed: int = 0,
) -> KernelClassifier:
    """Grid-search on the hold-out split, then refit on train plus validation."""
    result = grid_search(
        train_vectors,
        train_labels,
        val_vectors,
        val_labels,
        grid_penalty,
        grid_kernel_gamma,
        seed,
    )
    vectors = np.concatenate(
        [np.asarray(train_vectors, dtype=np.float64), np.asarray(val_vectors, dtype=np.float64)]
    )
    labels = np.concatenate([np.asarray(train_labels), np.asarray(val_labels)])
    return fit_svm(vectors, labels, result.penalty, result.kernel_gamma, seed)
