"""Grayscale image handling: decoding, resolution scaling, and patch grids.

Images are immutable 8-bit rasters. The scale factor used throughout the
package is an *area* ratio: scaling by ``s`` keeps roughly ``s`` times the
pixel count, so each linear dimension shrinks by ``sqrt(s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# ITU-R BT.601 luma weights for R, G, B.
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

# Pillow reports all netpbm flavours (including binary PGM) as "PPM".
_SUPPORTED_FORMATS = {"PNG", "PPM"}

_CONVERTIBLE_MODES = {"1", "LA", "P", "PA", "RGB", "RGBA"}


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """A 2-D intensity raster with values in [0, 255], immutable once built."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D pixel array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image dimensions must be at least 1x1")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError("pixel values must be integers in [0, 255]")
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        else:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class PatchGrid:
    """Equal-sized, non-overlapping sub-images of one source image."""

    level: int
    side: int
    patches: tuple[GrayImage, ...]

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError("grid level must be >= 1")
        if self.side != 2 ** (self.level - 1):
            raise ValueError("side must equal 2**(level - 1)")
        if len(self.patches) != self.side * self.side:
            raise ValueError("patch count must equal side * side")
        first = self.patches[0]
        for patch in self.patches[1:]:
            if patch.width != first.width or patch.height != first.height:
                raise ValueError("all patches must share the same dimensions")

    @property
    def patch_count(self) -> int:
        return len(self.patches)


def load_image(path: str | Path) -> GrayImage:
    """Load a PNG or binary PGM file as a grayscale image.

    Color inputs are reduced to intensity with the BT.601 luma weighting
    (0.299 R + 0.587 G + 0.114 B), rounded to the nearest integer.
    """
    path = Path(path)
    try:
        pil = Image.open(path)
    except UnidentifiedImageError as exc:
        raise ValueError(f"unsupported or corrupt image file: {path}") from exc
    with pil:
        if pil.format not in _SUPPORTED_FORMATS:
            raise ValueError(
                f"unsupported image format {pil.format!r} in {path}; expected PNG or PGM"
            )
        if pil.width < 1 or pil.height < 1:
            raise ValueError(f"zero-dimension image: {path}")
        if pil.mode == "L":
            return GrayImage(np.asarray(pil, dtype=np.uint8))
        if pil.mode in _CONVERTIBLE_MODES:
            rgb = np.asarray(pil.convert("RGB"), dtype=np.float64)
            luma = _round_half_up(rgb @ _LUMA_WEIGHTS)
            return GrayImage(np.clip(luma, 0, 255).astype(np.uint8))
        raise ValueError(f"unsupported image mode {pil.mode!r} in {path}")


def rescale(img: GrayImage, scale: float) -> GrayImage:
    """Resample an image so its pixel count is about ``scale`` times the original.

    ``scale`` is an area ratio in (0, 1]; each linear dimension becomes
    ``round(dim * sqrt(scale))`` (at least 1). Downsampling uses bilinear
    interpolation; ``scale == 1`` returns a pixel-identical copy.
    """
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"scale must lie in (0, 1], got {scale}")
    if scale == 1.0:
        return GrayImage(img.pixels)
    root = math.sqrt(scale)
    new_w = max(1, int(math.floor(img.width * root + 0.5)))
    new_h = max(1, int(math.floor(img.height * root + 0.5)))
    if new_w == img.width and new_h == img.height:
        return GrayImage(img.pixels)
    src = img.pixels.astype(np.float64)

    def _axis_coords(n_dst: int, n_src: int):
        centers = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
        lo = np.floor(centers).astype(np.int64)
        frac = centers - lo
        lo0 = np.clip(lo, 0, n_src - 1)
        lo1 = np.clip(lo + 1, 0, n_src - 1)
        return lo0, lo1, frac

    x0, x1, fx = _axis_coords(new_w, img.width)
    y0, y1, fy = _axis_coords(new_h, img.height)
    top = src[np.ix_(y0, x0)] * (1.0 - fx) + src[np.ix_(y0, x1)] * fx
    bottom = src[np.ix_(y1, x0)] * (1.0 - fx) + src[np.ix_(y1, x1)] * fx
    blended = top * (1.0 - fy)[:, None] + bottom * fy[:, None]
    out = np.clip(_round_half_up(blended), 0, 255).astype(np.uint8)
    return GrayImage(out)


def grid_count(level: int) -> int:
    """Number of patches produced at a grid level: 4**(level - 1)."""
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    return 4 ** (level - 1)


def split_patches(img: GrayImage, level: int) -> PatchGrid:
    """Divide an image into a 2**(level-1) x 2**(level-1) grid of equal patches.

    Remainder pixels on the right/bottom edges are discarded when the
    dimensions do not divide evenly, so every patch has identical size.
    Patches are ordered row-major.
    """
    side = 2 ** (level - 1) if level >= 1 else 0
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    if img.width < side or img.height < side:
        raise ValueError(
            f"image {img.width}x{img.height} too small for a {side}x{side} patch grid"
        )
    patch_w = img.width // side
    patch_h = img.height // side
    patches = []
    for row in range(side):
        for col in range(side):
            block = img.pixels[
                row * patch_h : (row + 1) * patch_h,
                col * patch_w : (col + 1) * patch_w,
            ]
            patches.append(GrayImage(block))
    return PatchGrid(level=level, side=side, patches=tuple(patches))


def write_pgm(img: GrayImage, path: str | Path) -> None:
    """Write an image as a binary (P5) PGM file."""
    path = Path(path)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    path.write_bytes(header + img.pixels.tobytes())
