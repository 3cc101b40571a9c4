from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ConstantStub
from texcascade import (
    CostLedger,
    FEATURE_SETS,
    GrayImage,
    ScoreSet,
    SlfLevelModel,
    fuse,
    grid_count,
    slf_classify,
)


def stub_level(level, probs_per_set, gamma_costs=None, sets=("lbp",)):
    gamma_costs = gamma_costs or [1] * len(sets)
    return SlfLevelModel(
        level=level,
        feature_sets=tuple(FEATURE_SETS[s] for s in sets),
        classifiers=tuple(
            ConstantStub(p, g) for p, g in zip(probs_per_set, gamma_costs)
        ),
    )


def test_level_model_validation():
    with pytest.raises(ValueError):
        stub_level(0, [(0.5, 0.5)])
    with pytest.raises(ValueError):
        SlfLevelModel(level=1, feature_sets=(), classifiers=())
    with pytest.raises(ValueError):
        SlfLevelModel(
            level=1,
            feature_sets=(FEATURE_SETS["lbp"],),
            classifiers=(ConstantStub((0.5, 0.5)), ConstantStub((0.5, 0.5))),
        )


def test_fuse_mean_example():
    out = fuse([(0.8, 0.2), (0.6, 0.4)], "mean")
    assert np.allclose(out, (0.7, 0.3))


def test_fuse_singleton_identity():
    single = [(0.3, 0.5, 0.2)]
    for rule in ("mean", "product", "max"):
        assert np.allclose(fuse(single, rule), single[0])


def test_fuse_product_renormalizes():
    out = fuse([(0.5, 0.5), (0.9, 0.1)], "product")
    assert np.allclose(out, (0.9, 0.1))


def test_fuse_product_zero_sum_falls_back_to_uniform():
    out = fuse([(1.0, 0.0), (0.0, 1.0)], "product")
    assert np.allclose(out, (0.5, 0.5))


def test_fuse_rejects_bad_input():
    with pytest.raises(ValueError):
        fuse(np.empty((0, 3)), "mean")
    with pytest.raises(ValueError):
        fuse([(0.5, 0.5)], "median")


@given(
    st.lists(
        st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3),
        min_size=2,
        max_size=6,
    )
)
def test_fuse_mean_permutation_invariant(rows):
    rows = [np.asarray(r) / np.sum(r) for r in rows]
    forward = fuse(rows, "mean")
    backward = fuse(rows[::-1], "mean")
    assert np.allclose(forward, backward, atol=1e-12)
    assert forward.sum() == pytest.approx(1.0, abs=1e-9)
    assert forward.min() >= 0.0


def test_fuse_outputs_are_probability_vectors(rng):
    rows = rng.dirichlet(np.ones(4), size=8)
    for rule in ("mean", "product", "max"):
        out = fuse(rows, rule)
        assert out.sum() == pytest.approx(1.0, abs=1e-9)
        assert out.min() >= 0.0


def test_score_set_validation():
    with pytest.raises(ValueError):
        ScoreSet(np.empty((0, 2)), patch_count=0, set_count=1)
    with pytest.raises(ValueError):
        ScoreSet(np.ones((3, 2)), patch_count=2, set_count=2)


def test_single_patch_single_set_is_classifier_output(rng):
    img = GrayImage(rng.integers(0, 256, (16, 16), dtype=np.uint8))
    model = stub_level(1, [(0.6, 0.4)])
    ledger = CostLedger()
    out = slf_classify(img, model, "mean", ledger)
    assert np.array_equal(out, (0.6, 0.4))
    assert ledger.classifier_calls == 1


def test_level3_two_sets_call_count(rng):
    img = GrayImage(rng.integers(0, 256, (64, 64), dtype=np.uint8))
    model = stub_level(
        3, [(0.5, 0.5), (0.7, 0.3)], gamma_costs=[10, 20], sets=("lbp", "lpq")
    )
    ledger = CostLedger()
    slf_classify(img, model, "mean", ledger)
    assert ledger.classifier_calls == 32  # 16 patches x 2 feature sets
    assert ledger.classifier_ops == 16 * 10 + 16 * 20
    assert ledger.classifier_dim_ops == 16 * 10 * 59 + 16 * 20 * 256
    assert ledger.feature_ops == 64 * 64 * 9 + 64 * 64 * 49


def test_constant_stub_fusion_is_hand_mean(rng):
    img = GrayImage(rng.integers(0, 256, (32, 32), dtype=np.uint8))
    model = stub_level(2, [(0.8, 0.2), (0.4, 0.6)], sets=("lbp", "lpq"))
    out = slf_classify(img, model)
    assert np.allclose(out, (0.6, 0.4))


@given(level=st.integers(1, 3), set_count=st.integers(1, 2))
def test_call_count_invariant(level, set_count):
    rng = np.random.default_rng(level * 10 + set_count)
    img = GrayImage(rng.integers(0, 256, (32, 32), dtype=np.uint8))
    sets = ("lbp", "lpq")[:set_count]
    model = stub_level(level, [(0.5, 0.5)] * set_count, sets=sets)
    ledger = CostLedger()
    slf_classify(img, model, "mean", ledger)
    assert ledger.classifier_calls == grid_count(level) * set_count


def test_slf_classify_deterministic(rng):
    img = GrayImage(rng.integers(0, 256, (24, 24), dtype=np.uint8))
    model = stub_level(2, [(0.55, 0.45)])
    assert np.array_equal(slf_classify(img, model), slf_classify(img, model))
