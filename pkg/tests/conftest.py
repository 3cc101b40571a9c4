from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from texcascade import harness

settings.register_profile(
    "suite",
    max_examples=30,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def synth_manifest(tmp_path_factory):
    """The desk-scale synthetic dataset shared by the heavier tests."""
    root = tmp_path_factory.mktemp("synth")
    return harness.synth_dataset(5, 20, 64, seed=7, out_dir=root)


@pytest.fixture(scope="session")
def synth_images(synth_manifest):
    """All synthetic images as GrayImage, keyed by entry index."""
    from texcascade import load_image

    return [
        load_image(synth_manifest.image_path(i))
        for i in range(len(synth_manifest.entries))
    ]


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
