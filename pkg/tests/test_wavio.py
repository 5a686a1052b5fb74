import numpy as np
import pytest

from mixclust.errors import InvalidInputError
from mixclust.wavio import read_wav, write_wav


@pytest.mark.parametrize("fmt,tol", [("float32", 1e-7), ("pcm16", 1.0 / 32768)])
@pytest.mark.parametrize("channels", [1, 2])
def test_round_trip(tmp_path, fmt, tol, channels):
    rng = np.random.default_rng(0)
    x = 0.5 * rng.uniform(-1, 1, size=(1000, channels))
    if channels == 1:
        x = x[:, 0]
    path = write_wav(tmp_path / "a.wav", x, 16000, fmt)
    y, rate = read_wav(path, expected_rate=16000)
    assert rate == 16000
    assert y.shape == x.shape
    assert np.max(np.abs(x - y)) <= tol


def test_header_is_little_endian_riff(tmp_path):
    path = write_wav(tmp_path / "a.wav", np.zeros(10), 16000, "pcm16")
    raw = path.read_bytes()
    assert raw[:4] == b"RIFF" and raw[8:12] == b"WAVE"


def test_rate_mismatch(tmp_path):
    path = write_wav(tmp_path / "a.wav", np.zeros(100), 8000)
    with pytest.raises(InvalidInputError):
        read_wav(path, expected_rate=16000)


def test_missing_file(tmp_path):
    with pytest.raises(InvalidInputError):
        read_wav(tmp_path / "nope.wav")
