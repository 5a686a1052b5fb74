"""Normalized phase difference (NPD) between two microphone spectrograms."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .dsp import Spectrogram
from .errors import InvalidInputError

DEFAULT_SILENCE_FLOOR_DB = -60.0


@dataclass
class NpdMap:
    """Per-bin delay estimate in seconds; NaN where ``valid`` is False."""

    values: np.ndarray
    valid: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def filled(self, fill: float = 0.0) -> np.ndarray:
        return np.where(self.valid, self.values, fill)

    def valid_values(self) -> np.ndarray:
        return self.values[self.valid]


def _active(mag: np.ndarray, floor_db: float) -> np.ndarray:
    frame_max = mag.max(axis=0, keepdims=True)
    return (mag > frame_max * 10.0 ** (floor_db / 20.0)) & (mag > 0)


def normalized_phase_difference(m1: Spectrogram, m2: Spectrogram,
                                silence_floor: float = DEFAULT_SILENCE_FLOOR_DB) -> NpdMap:
    """Phase of mic 2 relative to mic 1, divided by angular frequency.

    With mic 2 hearing ``s(t + delay)`` the result equals ``delay`` in every
    bin a single source dominates. DC bins and bins where both channels sit
    more than ``silence_floor`` dB under their frame maximum are invalid.
    The Nyquist row is real-valued for real input, so it is invalid too.
    """
    if m1.shape != m2.shape:
        raise InvalidInputError(f"spectrogram shapes differ: {m1.shape} vs {m2.shape}")
    if m1.cfg != m2.cfg:
        raise InvalidInputError("spectrograms use different STFT configs")
    a, b = np.asarray(m1.bins), np.asarray(m2.bins)
    omega = m1.cfg.omega()[:, None]
    valid = _active(np.abs(a), silence_floor) | _active(np.abs(b), silence_floor)
    valid[0, :] = False
    if m1.cfg.fft_size % 2 == 0:
        valid[-1, :] = False
    with np.errstate(divide="ignore", invalid="ignore"):
        # cross term written out so identical channels give an exact zero
        cross_re = b.real * a.real + b.imag * a.imag
        cross_im = b.imag * a.real - b.real * a.imag
        values = np.arctan2(cross_im, cross_re) / omega
    values = np.where(valid, values, np.nan)
    return NpdMap(values, valid)


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left_seconds", "bin_right_seconds", "count"])
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
        return path

    @classmethod
    def from_csv(cls, path) -> "Histogram":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        edges = [float(r["bin_left_seconds"]) for r in rows]
        edges.append(float(rows[-1]["bin_right_seconds"]) if rows else 0.0)
        return cls(np.array(edges), np.array([int(r["count"]) for r in rows]))

    def peaks(self, smooth: int = 3, min_prominence: float = 0.05) -> np.ndarray:
        """Indices of local maxima of the moving-average-smoothed counts.

        Maxima whose prominence is under ``min_prominence`` of the tallest
        bin are dropped; the tails and the valley between sources ripple.
        """
        return local_maxima(self.counts, smooth, min_prominence)


def local_maxima(counts, smooth: int = 3, min_prominence: float = 0.0) -> np.ndarray:
    """Peaks of the moving-average-smoothed counts, flat tops counted once.

    ``min_prominence`` is relative to the tallest smoothed bin.
    """
    c = np.asarray(counts, dtype=float)
    if c.size == 0 or c.max() <= 0:
        return np.array([], dtype=int)
    if smooth > 1:
        c = np.convolve(c, np.ones(smooth) / smooth, mode="same")
    # zero padding lets the first and last bins be peaks
    idx, _ = find_peaks(np.pad(c, 1), prominence=max(min_prominence * c.max(), 1e-12))
    return idx - 1


def npd_histogram(npd: NpdMap, bin_count: int = 60,
                  value_range: tuple = (-40e-6, 40e-6)) -> Histogram:
    if bin_count < 2:
        raise InvalidInputError("bin_count must be >= 2")
    counts, edges = np.histogram(npd.valid_values(), bins=bin_count, range=value_range)
    return Histogram(edges, counts)


def weighted_median(values, weights) -> float:
    order = np.argsort(values)
    v, w = np.asarray(values)[order], np.asarray(weights)[order]
    cum = np.cumsum(w)
    return float(v[np.searchsorted(cum, 0.5 * cum[-1])])


def energy_weighted_median(npd: NpdMap, m1: Spectrogram) -> float:
    """Median NPD over valid bins, each bin weighted by its mic-1 energy."""
    energy = np.abs(m1.bins) ** 2
    return weighted_median(npd.valid_values(), energy[npd.valid])
