from __future__ import annotations

import numpy as np
import pytest

import oracles
from texcascade import CostLedger, GrayImage, LBP, LPQ, extract, extract_lbp, extract_lpq


def random_image(rng, h, w, high=256):
    return GrayImage(rng.integers(0, high, (h, w), dtype=np.uint8))


def test_lbp_constant_image_single_bin():
    img = GrayImage(np.full((8, 8), 77, dtype=np.uint8))
    fv = extract_lbp(img)
    # ties compare as >=, so every interior pixel yields the all-ones code
    assert np.count_nonzero(fv.values) == 1
    assert fv.values.max() == pytest.approx(1.0)


def test_lbp_shape_and_normalization(rng):
    fv = extract_lbp(random_image(rng, 12, 15))
    assert fv.set_id == "lbp"
    assert fv.values.shape == (59,)
    assert fv.values.sum() == pytest.approx(1.0, abs=1e-9)
    assert fv.values.min() >= 0.0


def test_lbp_matches_naive_oracle(rng):
    for height, width in ((16, 16), (16, 16), (16, 16), (9, 21), (13, 5)):
        img = random_image(rng, height, width)
        fast = extract_lbp(img).values
        naive = oracles.lbp_histogram_naive(img.pixels)
        assert np.array_equal(fast, naive)


def test_lbp_monotone_invariance(rng):
    img = random_image(rng, 16, 16, high=64)
    base = extract_lbp(img).values
    for _ in range(3):
        table = np.sort(rng.choice(256, size=64, replace=False)).astype(np.uint8)
        mapped = GrayImage(table[img.pixels])
        assert np.array_equal(extract_lbp(mapped).values, base)


def test_lbp_too_small():
    with pytest.raises(ValueError):
        extract_lbp(GrayImage(np.zeros((2, 5), dtype=np.uint8)))


def test_lpq_constant_image_single_bin():
    fv = extract_lpq(GrayImage(np.full((9, 9), 13, dtype=np.uint8)))
    assert np.count_nonzero(fv.values) == 1
    assert fv.values.max() == pytest.approx(1.0)


def test_lpq_shape_and_normalization(rng):
    fv = extract_lpq(random_image(rng, 11, 14))
    assert fv.set_id == "lpq"
    assert fv.values.shape == (256,)
    assert fv.values.sum() == pytest.approx(1.0, abs=1e-9)
    assert fv.values.min() >= 0.0


def test_lpq_matches_direct_dft_oracle(rng):
    for height, width in ((32, 32), (11, 19)):
        img = random_image(rng, height, width)
        fast = extract_lpq(img).values
        naive = oracles.lpq_histogram_naive(img.pixels)
        assert np.array_equal(fast, naive)


def test_lpq_too_small():
    with pytest.raises(ValueError):
        extract_lpq(GrayImage(np.zeros((6, 9), dtype=np.uint8)))


def test_extract_dispatch(rng):
    img = random_image(rng, 10, 10)
    assert extract(img, "lbp") == extract_lbp(img)
    assert extract(img, "lpq") == extract_lpq(img)
    with pytest.raises(ValueError):
        extract(img, "glcm")


def test_descriptor_metadata():
    assert (LBP.dim, LBP.window) == (59, 9)
    assert (LPQ.dim, LPQ.window) == (256, 49)


def test_extraction_charges_pixels_times_window(rng):
    img = random_image(rng, 10, 12)
    ledger = CostLedger()
    extract(img, "lbp", ledger)
    assert ledger.feature_pixels == 120
    assert ledger.feature_ops == 120 * 9
    extract(img, "lpq", ledger)
    assert ledger.feature_pixels == 240
    assert ledger.feature_ops == 120 * 9 + 120 * 49


def test_extractors_are_deterministic(rng):
    img = random_image(rng, 13, 13)
    assert extract_lbp(img) == extract_lbp(img)
    assert extract_lpq(img) == extract_lpq(img)


def test_output_dimension_matches_descriptor(rng):
    img = random_image(rng, 9, 9)
    assert extract(img, "lbp").values.size == LBP.dim
    assert extract(img, "lpq").values.size == LPQ.dim
