"""Shared fixtures: a small demonstration corpus and quickly trained models."""

import numpy as np
import pytest

import pilectl as pc


@pytest.fixture(scope="session")
def corpus():
    """Eight summer demonstrations logged at 100 Hz (decimates to 20 Hz)."""
    rng = np.random.default_rng(2)
    return pc.generate_demonstrations(8, pc.SUMMER, 100.0, rng)


@pytest.fixture(scope="session")
def d1(corpus):
    return pc.build_dataset(corpus, pc.DatasetSpec(variant=pc.D1))


@pytest.fixture(scope="session")
def d2(corpus):
    return pc.build_dataset(corpus, pc.DatasetSpec(variant=pc.D2))


@pytest.fixture(scope="session")
def trained_nnet(d1):
    spec = pc.ControllerSpec("nnet", 4)
    params, _ = pc.train(spec, d1, pc.TrainConfig(epochs=3, seed=1))
    return params


@pytest.fixture(scope="session")
def trained_dannet(d1):
    spec = pc.ControllerSpec("dannet", 4, 4)
    params, _ = pc.train(spec, d1, pc.TrainConfig(epochs=3, seed=1))
    return params
