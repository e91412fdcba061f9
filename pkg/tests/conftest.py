import pytest

from labelmm.config import OUTPUT_DIR_ENV
from labelmm.data import (
    Dataset, GaussianSpec, LabelSpace, benchmark_spec, synth_gaussians
)


@pytest.fixture(autouse=True)
def no_output_override(monkeypatch):
    # a developer's LABELMM_OUTPUT_DIR must not redirect test output
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


@pytest.fixture
def binary_space():
    return LabelSpace(2)


@pytest.fixture
def tiny_dataset(binary_space):
    features = [[0.0, 1.0], [1.5, -2.0], [0.25, 0.5], [-1.0, 3.0]]
    return Dataset(features, [0, 1, 1, 0], binary_space,
                   truth=[0, 1, 0, 0])


@pytest.fixture
def synth2():
    return synth_gaussians(benchmark_spec('synth:2'), 100, seed=3)


@pytest.fixture
def separated():
    """ two classes 8 sigma apart: every reasonable model is perfect """
    spec = GaussianSpec([[-4.0, 0.0], [4.0, 0.0]], 1.0)
    return synth_gaussians(spec, 150, seed=11)
