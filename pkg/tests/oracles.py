"""Independent brute-force reference implementations used by the tests.

Everything here is deliberately naive (explicit loops, no shared code with
the package) so it can serve as an oracle for the fast paths.
"""

from __future__ import annotations

import cmath
import hashlib
import itertools
import math

import numpy as np

# ---------------------------------------------------------------------------
# Descriptor oracles

_RING = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _uniform_bin_map() -> dict[int, int]:
    def transitions(code: int) -> int:
        bits = [(code >> k) & 1 for k in range(8)]
        return sum(1 for k in range(8) if bits[k] != bits[(k + 1) % 8])

    uniform = [c for c in range(256) if transitions(c) <= 2]
    return {code: index for index, code in enumerate(uniform)}


_UNIFORM_BINS = _uniform_bin_map()


def lbp_codes_naive(pixels: np.ndarray) -> list[int]:
    """Per-pixel 8-neighbor codes for every interior pixel, row-major."""
    h, w = pixels.shape
    codes = []
    for r in range(1, h - 1):
        for c in range(1, w - 1):
            code = 0
            for bit, (dy, dx) in enumerate(_RING):
                if pixels[r + dy, c + dx] >= pixels[r, c]:
                    code |= 1 << bit
            codes.append(code)
    return codes


def lbp_histogram_naive(pixels: np.ndarray) -> np.ndarray:
    hist = np.zeros(59)
    codes = lbp_codes_naive(pixels)
    for code in codes:
        hist[_UNIFORM_BINS.get(code, 58)] += 1
    return hist / len(codes)


_LPQ_FREQS = ((1 / 7, 0.0), (0.0, 1 / 7), (1 / 7, 1 / 7), (1 / 7, -1 / 7))

_LPQ_WEIGHTS = {
    q: {
        (dy, dx): cmath.exp(-2j * math.pi * (fx * dx + fy * dy))
        for dy in range(-3, 4)
        for dx in range(-3, 4)
    }
    for q, (fx, fy) in enumerate(_LPQ_FREQS)
}


def lpq_codes_naive(pixels: np.ndarray) -> list[int]:
    """Per-window 8-bit phase codes via explicit double-summation DFT."""
    h, w = pixels.shape
    codes = []
    for r in range(3, h - 3):
        for c in range(3, w - 3):
            code = 0
            for q in range(4):
                weights = _LPQ_WEIGHTS[q]
                coef = 0.0 + 0.0j
                for dy in range(-3, 4):
                    for dx in range(-3, 4):
                        coef += float(pixels[r + dy, c + dx]) * weights[(dy, dx)]
                if coef.real >= 0.0:
                    code |= 1 << (2 * q)
                if coef.imag >= 0.0:
                    code |= 1 << (2 * q + 1)
            codes.append(code)
    return codes


def lpq_histogram_naive(pixels: np.ndarray) -> np.ndarray:
    hist = np.zeros(256)
    codes = lpq_codes_naive(pixels)
    for code in codes:
        hist[code] += 1
    return hist / len(codes)


# ---------------------------------------------------------------------------
# Simplified SMO (random second index), after the classic teaching recipe


class SimpleSmo:
    """Naive binary SMO with a random second-index heuristic."""

    def __init__(self, penalty: float, kernel_gamma: float, seed: int = 0,
                 tol: float = 1e-5, max_passes: int = 50, max_sweeps: int = 4000):
        self.penalty = penalty
        self.kernel_gamma = kernel_gamma
        self.seed = seed
        self.tol = tol
        self.max_passes = max_passes
        self.max_sweeps = max_sweeps

    def fit(self, x: np.ndarray, y_pm: np.ndarray) -> None:
        rng = np.random.default_rng(self.seed)
        n = len(y_pm)
        k = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                d = x[i] - x[j]
                k[i, j] = math.exp(-self.kernel_gamma * float(d @ d))
        alpha = np.zeros(n)
        b = 0.0
        c = self.penalty

        def f(i: int) -> float:
            return float((alpha * y_pm) @ k[:, i] + b)

        passes = 0
        sweeps = 0
        while passes < self.max_passes and sweeps < self.max_sweeps:
            sweeps += 1
            changed = 0
            for i in range(n):
                err_i = f(i) - y_pm[i]
                if (y_pm[i] * err_i < -self.tol and alpha[i] < c) or (
                    y_pm[i] * err_i > self.tol and alpha[i] > 0
                ):
                    j = int(rng.integers(0, n - 1))
                    if j >= i:
                        j += 1
                    err_j = f(j) - y_pm[j]
                    ai_old, aj_old = alpha[i], alpha[j]
                    if y_pm[i] != y_pm[j]:
                        lo, hi = max(0.0, aj_old - ai_old), min(c, c + aj_old - ai_old)
                    else:
                        lo, hi = max(0.0, ai_old + aj_old - c), min(c, ai_old + aj_old)
                    if lo == hi:
                        continue
                    eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
                    if eta >= 0:
                        continue
                    aj = aj_old - y_pm[j] * (err_i - err_j) / eta
                    aj = min(max(aj, lo), hi)
                    if abs(aj - aj_old) < 1e-5:
                        continue
                    ai = ai_old + y_pm[i] * y_pm[j] * (aj_old - aj)
                    b1 = b - err_i - y_pm[i] * (ai - ai_old) * k[i, i] - y_pm[j] * (aj - aj_old) * k[i, j]
                    b2 = b - err_j - y_pm[i] * (ai - ai_old) * k[i, j] - y_pm[j] * (aj - aj_old) * k[j, j]
                    if 0 < ai < c:
                        b = b1
                    elif 0 < aj < c:
                        b = b2
                    else:
                        b = (b1 + b2) / 2.0
                    alpha[i], alpha[j] = ai, aj
                    changed += 1
            passes = passes + 1 if changed == 0 else 0
        self.alpha = alpha
        self.b = b
        self.x = x.copy()
        self.y = y_pm.copy()

    def decision(self, point: np.ndarray) -> float:
        total = self.b
        for i in range(len(self.y)):
            if self.alpha[i] > 1e-8:
                d = self.x[i] - point
                total += self.alpha[i] * self.y[i] * math.exp(-self.kernel_gamma * float(d @ d))
        return total

    def support_count(self) -> int:
        return int(np.sum(self.alpha > 1e-8))


# ---------------------------------------------------------------------------
# Stub classifiers for fusion / cascade tests


class ConstantStub:
    """A classifier double returning a fixed probability vector."""

    def __init__(self, probs, gamma_cost: int = 1):
        self._probs = np.asarray(probs, dtype=np.float64)
        self.gamma_cost = gamma_cost
        self.class_count = int(self._probs.size)

    def classify(self, fv) -> np.ndarray:
        return self._probs.copy()


class HashingStub:
    """Deterministic pseudo-random scores keyed on the feature vector bytes."""

    def __init__(self, class_count: int, salt: int = 0, gamma_cost: int = 1):
        self.class_count = class_count
        self.salt = salt
        self.gamma_cost = gamma_cost

    def classify(self, fv) -> np.ndarray:
        digest = hashlib.blake2b(
            fv.values.tobytes() + self.salt.to_bytes(8, "little"), digest_size=8
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        raw = rng.random(self.class_count) + 1e-9
        return raw / raw.sum()


# ---------------------------------------------------------------------------
# Cascade and cost oracles


def cascade_trace(margins, thresholds, level_max):
    """Exit level of one cascade run: first gated level, else the last."""
    for level in range(1, level_max):
        if margins[level - 1] >= thresholds[level - 1]:
            return level
    return level_max


def amlf_cost_naive(exit_counts: dict[int, int], gammas_per_level: dict[int, list], set_count: int):
    """Literal double sum over exit levels and visited levels."""
    total = 0
    for exit_level, n_exit in exit_counts.items():
        inner = 0
        for level in range(1, exit_level + 1):
            calls = 4 ** (level - 1)
            inner += calls * sum(gammas_per_level[level])
        total += n_exit * inner
    del set_count  # gammas are already per feature set
    return total


def slf_cost_naive(sample_count, level, gammas: list):
    return sample_count * 4 ** (level - 1) * sum(gammas)


def global_slf_naive(sample_count, level, pixels, scale, windows, dims, gammas):
    fcost = sum(scale * pixels * w for w in windows)
    ccost = 4 ** (level - 1) * sum(g * d for g, d in zip(gammas, dims))
    return sample_count * (fcost + ccost)


def global_amlf_naive(exit_counts, pixels, scale, windows, dims, gammas_per_level):
    total = 0.0
    for exit_level, n_exit in exit_counts.items():
        inner = 0.0
        for level in range(1, exit_level + 1):
            fcost = sum(scale * pixels * w for w in windows)
            ccost = 4 ** (level - 1) * sum(
                g * d for g, d in zip(gammas_per_level[level], dims)
            )
            inner += fcost + ccost
        total += n_exit * inner
    return total


def best_threshold_combo(candidate_lists, score_of_combo):
    """Exhaustive enumeration with the accuracy/cost/lexicographic tie-break."""
    best = None
    for combo in itertools.product(*candidate_lists):
        combo = tuple(float(t) for t in combo)
        accuracy, cost = score_of_combo(combo)
        key = (accuracy, -cost, combo)
        if best is None or key > best[0]:
            best = (key, combo)
    return best[1]


def margin_sorted(probs) -> float:
    ordered = sorted(float(p) for p in probs)
    return ordered[-1] - ordered[-2]
