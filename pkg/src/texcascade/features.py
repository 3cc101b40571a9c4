"""Texture descriptors: uniform-pattern LBP and phase-quantization LPQ histograms.

Both extractors produce L1-normalized histograms so that patch size does not
leak into classifier scale. Each descriptor carries a ``window`` size, the
number of pixels its filter touches per output pixel, which is what the cost
ledger charges per processed pixel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .imaging import GrayImage

if TYPE_CHECKING:  # pragma: no cover
    from .cost import CostLedger

LBP_ID = "lbp"
LPQ_ID = "lpq"


@dataclass(frozen=True)
class FeatureSetDescriptor:
    """Identity and cost metadata of one descriptor family.

    ``dim`` is the histogram length fed to the classifier; ``window`` is the
    neighborhood size in pixels touched per output pixel.
    """

    set_id: str
    dim: int
    window: int


LBP = FeatureSetDescriptor(LBP_ID, dim=59, window=9)
LPQ = FeatureSetDescriptor(LPQ_ID, dim=256, window=49)

FEATURE_SETS: dict[str, FeatureSetDescriptor] = {LBP_ID: LBP, LPQ_ID: LPQ}


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """An L1-normalized descriptor histogram tagged with its feature-set id."""

    set_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.set_id == other.set_id and bool(
            np.array_equal(self.values, other.values)
        )


# Eight neighbors at radius 1, in circular ring order (clockwise from the
# top-left corner). Bit k of an LBP code corresponds to offset k.
_LBP_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _circular_transitions(code: int) -> int:
    bits = [(code >> k) & 1 for k in range(8)]
    return sum(bits[k] != bits[(k + 1) % 8] for k in range(8))


def _build_lbp_bin_table() -> np.ndarray:
    """Map each 8-bit code to its histogram bin.

    The 58 uniform codes (at most two circular 0/1 transitions) get dedicated
    bins in ascending code order; every other code shares bin 58.
    """
    uniform = [c for c in range(256) if _circular_transitions(c) <= 2]
    table = np.full(256, len(uniform), dtype=np.int64)
    for bin_index, code in enumerate(uniform):
        table[code] = bin_index
    return table


_LBP_BIN_TABLE = _build_lbp_bin_table()


def extract_lbp(img: GrayImage, ledger: "CostLedger | None" = None) -> FeatureVector:
    """Uniform LBP histogram over the 8-neighbor ring at radius 1.

    For every interior pixel the 8 neighbors are compared against the center
    (neighbor >= center sets the bit), giving an 8-bit code binned into the
    59-bin uniform-pattern histogram.
    """
    h, w = img.height, img.width
    if h < 3 or w < 3:
        raise ValueError(f"LBP requires at least a 3x3 image, got {w}x{h}")
    px = img.pixels
    center = px[1 : h - 1, 1 : w - 1]
    codes = np.zeros(center.shape, dtype=np.int64)
    for bit, (dy, dx) in enumerate(_LBP_OFFSETS):
        neighbor = px[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        codes |= (neighbor >= center).astype(np.int64) << bit
    counts = np.bincount(_LBP_BIN_TABLE[codes.ravel()], minlength=59)
    hist = counts / counts.sum()
    if ledger is not None:
        ledger.record_extraction(pixels=w * h, window=LBP.window)
    return FeatureVector(LBP_ID, hist)


_LPQ_WINDOW = 7
_LPQ_RADIUS = _LPQ_WINDOW // 2
# Four lowest non-zero frequency pairs (fx, fy) at a = 1/window.
_LPQ_FREQS = (
    (1.0 / _LPQ_WINDOW, 0.0),
    (0.0, 1.0 / _LPQ_WINDOW),
    (1.0 / _LPQ_WINDOW, 1.0 / _LPQ_WINDOW),
    (1.0 / _LPQ_WINDOW, -1.0 / _LPQ_WINDOW),
)


def _lpq_axis_weights() -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-frequency separable filter factors (column factor, row factor)."""
    offsets = np.arange(-_LPQ_RADIUS, _LPQ_RADIUS + 1)
    factors = []
    for fx, fy in _LPQ_FREQS:
        row = np.exp(-2j * np.pi * fx * offsets)
        col = np.exp(-2j * np.pi * fy * offsets)
        factors.append((col, row))
    return factors


_LPQ_FACTORS = _lpq_axis_weights()


def extract_lpq(img: GrayImage, ledger: "CostLedger | None" = None) -> FeatureVector:
    """LPQ histogram: sign-quantized short-term Fourier phase over 7x7 windows.

    For every pixel with a full 7x7 neighborhood, the windowed Fourier
    coefficient F(u) = sum_d f(center + d) * exp(-2j*pi*(fx*dx + fy*dy)) is
    evaluated at the four standard low frequencies. The signs of the four
    real and four imaginary parts (value >= 0 -> 1) form an 8-bit code:
    bit 2q is Re(F_q) and bit 2q+1 is Im(F_q). Codes are collected into a
    256-bin histogram. No decorrelation step is applied.
    """
    h, w = img.height, img.width
    if h < _LPQ_WINDOW or w < _LPQ_WINDOW:
        raise ValueError(f"LPQ requires at least a 7x7 image, got {w}x{h}")
    px = img.pixels.astype(np.float64)
    out_h, out_w = h - 2 * _LPQ_RADIUS, w - 2 * _LPQ_RADIUS
    codes = np.zeros((out_h, out_w), dtype=np.int64)
    for q, (col_factor, row_factor) in enumerate(_LPQ_FACTORS):
        # Separable evaluation: filter along x, then along y.
        tmp = np.zeros((h, out_w), dtype=np.complex128)
        for k in range(_LPQ_WINDOW):
            tmp += row_factor[k] * px[:, k : k + out_w]
        coef = np.zeros((out_h, out_w), dtype=np.complex128)
        for k in range(_LPQ_WINDOW):
            coef += col_factor[k] * tmp[k : k + out_h, :]
        codes |= (coef.real >= 0.0).astype(np.int64) << (2 * q)
        codes |= (coef.imag >= 0.0).astype(np.int64) << (2 * q + 1)
    counts = np.bincount(codes.ravel(), minlength=256)
    hist = counts / counts.sum()
    if ledger is not None:
        ledger.record_extraction(pixels=w * h, window=LPQ.window)
    return FeatureVector(LPQ_ID, hist)


_EXTRACTORS = {LBP_ID: extract_lbp, LPQ_ID: extract_lpq}


def extract(
    img: GrayImage, set_id: str, ledger: "CostLedger | None" = None
) -> FeatureVector:
    """Dispatch to the extractor registered for ``set_id``."""
    try:
        extractor = _EXTRACTORS[set_id]
    except KeyError:
        raise ValueError(f"unknown feature set {set_id!r}") from None
    return extractor(img, ledger)
