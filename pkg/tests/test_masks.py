import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mixclust.dsp import istft, stft
from mixclust.errors import InvalidInputError
from mixclust.features import NpdMap, normalized_phase_difference
from mixclust.masks import (BinaryMask, PartitionTarget, apply_mask, bpd_mask, dominant_source_mask,
                            read_mask, rpd_target, unvec, vec, write_mask)
from mixclust.spatial import Scene, render_stereo_mixture


def test_vec_order():
    grid = np.arange(6).reshape(2, 3)  # F=2, T=3
    np.testing.assert_array_equal(vec(grid), [0, 3, 1, 4, 2, 5])
    np.testing.assert_array_equal(unvec(vec(grid), 2, 3), grid)


def test_ds_target_is_one_hot(cfg, rng):
    srcs = [stft(rng.standard_normal(4000), cfg) for _ in range(3)]
    y = dominant_source_mask(srcs).to_target("DS").matrix
    assert y.shape == (cfg.n_freqs * srcs[0].shape[1], 3)
    np.testing.assert_array_equal(y.sum(axis=1), 1.0)


def test_ds_tie_goes_to_lowest():
    a = np.ones((3, 2))
    assert np.all(dominant_source_mask([a, a]).assignments == 0)


def test_ds_picks_louder_source():
    a = np.array([[1.0, 3.0]])
    b = np.array([[2.0, 1.0]])
    np.testing.assert_array_equal(dominant_source_mask([a, b]).assignments, [[1, 0]])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_masked_components_sum_to_mixture(n, seed):
    rng = np.random.default_rng(seed)
    bins = rng.standard_normal((9, 6)) + 1j * rng.standard_normal((9, 6))
    from mixclust.dsp import Spectrogram, StftConfig
    mix = Spectrogram(bins, StftConfig(fft_size=16, hop=4))
    mask = BinaryMask(rng.integers(0, n, size=(9, 6)), n)
    parts = apply_mask(mix, mask)
    np.testing.assert_array_equal(sum(p.bins for p in parts), bins)
    for i in range(n):
        for j in range(i + 1, n):
            assert not np.any((parts[i].bins != 0) & (parts[j].bins != 0))


def test_masked_time_domain_sum(cfg, rng):
    x = rng.standard_normal(8000)
    spec = stft(x, cfg)
    mask = BinaryMask(rng.integers(0, 2, size=spec.shape), 2)
    y = sum(istft(p, length=len(x)) for p in apply_mask(spec, mask))
    core = slice(cfg.fft_size, len(x) - cfg.fft_size)
    np.testing.assert_allclose(y[core], x[core], atol=1e-10)


def test_mask_shape_mismatch(cfg, rng):
    spec = stft(rng.standard_normal(4000), cfg)
    with pytest.raises(InvalidInputError):
        apply_mask(spec, BinaryMask(np.zeros((3, 3), int), 2))
    with pytest.raises(InvalidInputError):
        BinaryMask(np.array([[0, 2]]), 2)


@settings(max_examples=25, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(1, 20), st.integers(1, 20)), elements=st.integers(0, 3)))
def test_mask_file_round_trip(tmp_path_factory, assign):
    path = tmp_path_factory.mktemp("m") / "x.mask"
    mask = BinaryMask(assign, 4)
    back = read_mask(write_mask(path, mask))
    assert back.n_sources == 4
    np.testing.assert_array_equal(back.assignments, assign)


def test_corrupt_mask_file(tmp_path):
    p = tmp_path / "bad.mask"
    p.write_bytes(b"nope")
    with pytest.raises(InvalidInputError):
        read_mask(p)
    write_mask(p, BinaryMask(np.zeros((4, 4), int), 2))
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(InvalidInputError):
        read_mask(p)


def test_bpd_sorted_and_invalid_to_nearest_zero():
    vals = np.array([[-20e-6, 15e-6, np.nan], [-19e-6, 16e-6, np.nan]])
    valid = ~np.isnan(vals)
    mask = bpd_mask(NpdMap(vals, valid), 2, rng=np.random.default_rng(0))
    np.testing.assert_array_equal(mask.assignments, [[0, 1, 1], [0, 1, 1]])


def test_bpd_too_few_bins():
    vals = np.full((2, 2), np.nan)
    vals[0, 0] = 0.0
    with pytest.raises(InvalidInputError):
        bpd_mask(NpdMap(vals, ~np.isnan(vals)), 2)


def test_bpd_agrees_with_ds_on_voices(cfg, corpus):
    rng = np.random.default_rng(11)
    f = next(s for s in corpus.speakers if s.gender == "f")
    m = next(s for s in corpus.speakers if s.gender == "m")
    srcs = [corpus.utterance(s, rng, 32000, 16000) for s in (f, m)]
    scene = Scene(np.zeros((2, 2)), np.array([140.0, 40.0]), np.array([-22e-6, 22e-6]),
                  np.array([0.5, 0.5]))
    mix = render_stereo_mixture(srcs, scene, 16000)
    m1, m2 = stft(mix.mic1, cfg), stft(mix.mic2, cfg)
    npd = normalized_phase_difference(m1, m2)
    bpd = bpd_mask(npd, 2, rng=rng, max_delay=29.2e-6)
    ds = dominant_source_mask([stft(r, cfg) for r in mix.references])
    energy = np.abs(m1.bins) ** 2 * npd.valid
    assert bpd.agreement(ds, weights=energy) > 0.8


def test_rpd_target_standardised(rng):
    vals = rng.normal(5e-6, 1e-5, size=(10, 8))
    valid = rng.random((10, 8)) > 0.3
    vals[~valid] = np.nan
    t = rpd_target(NpdMap(vals, valid))
    assert isinstance(t, PartitionTarget) and t.matrix.shape == (80, 1)
    z = unvec(t.matrix[:, 0], 10, 8)
    assert z[valid].mean() == pytest.approx(0.0, abs=1e-12)
    assert z[valid].std() == pytest.approx(1.0)
    assert np.all(z[~valid] == 0.0)


def test_bpd_label_map_covers_floor_bins():
    vals = np.array([[-20e-6, 15e-6, np.nan], [-19e-6, 16e-6, np.nan]])
    valid = ~np.isnan(vals)
    full = np.array([[-20e-6, 15e-6, -18e-6], [-19e-6, 16e-6, np.nan]])
    mask = bpd_mask(NpdMap(vals, valid), 2, rng=np.random.default_rng(0),
                    label_npd=NpdMap(full, ~np.isnan(full)))
    np.testing.assert_array_equal(mask.assignments, [[0, 1, 0], [0, 1, 1]])
    with pytest.raises(InvalidInputError):
        bpd_mask(NpdMap(vals, valid), 2, label_npd=NpdMap(full[:, :2], ~np.isnan(full[:, :2])))


def test_rpd_clips_to_max_delay():
    vals = np.array([[-10e-6, 10e-6, 5e-3, -10e-6]])
    t = rpd_target(NpdMap(vals, np.ones_like(vals, bool)), max_delay=10e-6)
    z = t.matrix[:, 0]
    assert z.std() == pytest.approx(1.0)
    assert z[2] == pytest.approx(z[1])


def test_rpd_label_map_fills_floor_bins():
    vals = np.array([[-10e-6, 10e-6, np.nan, np.nan]])
    full = np.array([[-10e-6, 10e-6, 10e-6, np.nan]])
    t = rpd_target(NpdMap(vals, ~np.isnan(vals)), 30e-6,
                   label_npd=NpdMap(full, ~np.isnan(full)))
    np.testing.assert_allclose(t.matrix[:, 0], [-1.0, 1.0, 1.0, 0.0])


def test_unknown_target_kind():
    with pytest.raises(InvalidInputError):
        PartitionTarget("XYZ", np.zeros((3, 1)))
