import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixclust.dsp import Spectrogram, StftConfig, is_cola, istft, stft, window
from mixclust.errors import InvalidInputError


def interior_error_db(x, y, edge):
    a, b = x[edge:-edge], y[edge:-edge]
    return 10 * np.log10(np.sum((a - b) ** 2) / np.sum(a ** 2))


def test_config_validation():
    with pytest.raises(InvalidInputError):
        StftConfig(fft_size=500)
    with pytest.raises(InvalidInputError):
        StftConfig(fft_size=512, hop=512)
    with pytest.raises(InvalidInputError):
        StftConfig(hop=100)
    with pytest.raises(InvalidInputError):
        StftConfig(sample_rate=0)
    assert is_cola(StftConfig())
    assert is_cola(StftConfig(fft_size=256, hop=64))


def test_two_second_clip_shape(cfg):
    spec = stft(np.random.default_rng(0).standard_normal(32000), cfg)
    # 257 rows as in the reference setup; frames follow the no-padding formula
    assert spec.shape == (257, (32000 - 512) // 128 + 1) == (257, 247)


def test_too_short_raises(cfg):
    with pytest.raises(InvalidInputError):
        stft(np.zeros(511), cfg)


def test_zeros(cfg):
    assert not np.any(stft(np.zeros(2048), cfg).bins)
    spec = Spectrogram(np.zeros((257, 10), complex), cfg)
    assert not np.any(istft(spec))


def test_cosine_matches_brute_force_dft(cfg):
    k = 40
    n = np.arange(4096)
    x = np.cos(2 * np.pi * k * n / cfg.fft_size)
    spec = stft(x, cfg)
    frame = x[5 * cfg.hop:5 * cfg.hop + cfg.fft_size] * window(cfg)
    m = np.arange(cfg.fft_size)
    ref = np.array([np.sum(frame * np.exp(-2j * np.pi * f * m / cfg.fft_size))
                    for f in range(cfg.n_freqs)])
    np.testing.assert_allclose(spec.bins[:, 5], ref, atol=1e-9)
    power = np.abs(ref) ** 2
    assert np.argmax(power) == k
    rel_db = 10 * np.log10(power / power[k] + 1e-300)
    outside = np.abs(np.arange(cfg.n_freqs) - k) >= 3
    assert rel_db[outside].max() < -30.0


def test_round_trip_white_noise(cfg):
    x = np.random.default_rng(3).standard_normal(32000)
    y = istft(stft(x, cfg))
    assert len(y) == len(x)
    assert interior_error_db(x, y, cfg.fft_size) < -60.0


def test_identity_mask_is_plain_round_trip(cfg):
    x = np.random.default_rng(4).standard_normal(8000)
    spec = stft(x, cfg)
    masked = spec.with_bins(spec.bins * 1.0)
    np.testing.assert_array_equal(istft(masked), istft(spec))


def test_istft_config_mismatch(cfg):
    spec = stft(np.random.default_rng(0).standard_normal(4096), cfg)
    with pytest.raises(InvalidInputError):
        istft(spec, cfg=StftConfig(fft_size=256, hop=64))
    with pytest.raises(InvalidInputError):
        istft(Spectrogram(spec.bins[:100], cfg))


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 40), st.integers(0, 2 ** 31 - 1))
def test_round_trip_property(n_frames, seed):
    cfg = StftConfig()
    n = (n_frames - 1) * cfg.hop + cfg.fft_size + seed % cfg.hop
    x = np.random.default_rng(seed).standard_normal(n)
    y = istft(stft(x, cfg))
    e = cfg.fft_size
    if n > 2 * e:
        rel = np.linalg.norm(x[e:-e] - y[e:-e]) / np.linalg.norm(x[e:-e])
        assert rel < 1e-6


@settings(max_examples=25, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2 ** 31 - 1))
def test_linearity(a, b, seed):
    cfg = StftConfig()
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(2048), rng.standard_normal(2048)
    lhs = stft(a * x + b * y, cfg).bins
    rhs = a * stft(x, cfg).bins + b * stft(y, cfg).bins
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10)


def test_parseval(cfg):
    x = np.random.default_rng(9).standard_normal(4096)
    spec = stft(x, cfg)
    w = window(cfg)
    for m in range(spec.shape[1]):
        frame = x[m * cfg.hop:m * cfg.hop + cfg.fft_size] * w
        p = np.abs(spec.bins[:, m]) ** 2
        spectral = (p[0] + p[-1] + 2 * p[1:-1].sum()) / cfg.fft_size
        assert abs(spectral - np.sum(frame ** 2)) <= 1e-8 * np.sum(frame ** 2)
