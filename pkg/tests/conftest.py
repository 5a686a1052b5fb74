import numpy as np
import pytest

from mixclust.corpus import SyntheticCorpus
from mixclust.dsp import StftConfig
from mixclust.spatial import Geometry


@pytest.fixture(scope="session")
def cfg():
    return StftConfig()


@pytest.fixture(scope="session")
def geom():
    return Geometry()


@pytest.fixture(scope="session")
def corpus():
    return SyntheticCorpus(n_speakers_per_gender=8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def lowpass_noise(rng, n, taps=16):
    x = rng.standard_normal(n + taps)
    return np.convolve(x, np.hanning(taps) / np.hanning(taps).sum(), mode="valid")[:n]


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory, corpus):
    from mixclust.dataset import DatasetSpec, generate_dataset
    out = tmp_path_factory.mktemp("ds")
    spec = DatasetSpec(n_sources=2, gender_group="fm", counts={"train": 20, "eval": 0, "test": 4},
                       clip_seconds=1.0)
    return generate_dataset(corpus, spec, out, seed=3)


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
