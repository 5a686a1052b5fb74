"""STFT analysis and overlap-add synthesis.

Frames are never centred or padded: frame ``m`` covers samples
``[m*hop, m*hop + fft_size)`` and only frames that lie fully inside the
signal are produced.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

WINDOWS = ("sqrt-hann",)


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 512
    hop: int = 128
    window: str = "sqrt-hann"
    sample_rate: int = 16000

    def __post_init__(self):
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise InvalidInputError(f"fft_size must be a power of two, got {self.fft_size}")
        if self.hop <= 0 or self.fft_size % self.hop:
            raise InvalidInputError("hop must divide fft_size")
        if self.fft_size < 2 * self.hop:
            raise InvalidInputError("fft_size must be at least twice the hop")
        if self.sample_rate <= 0:
            raise InvalidInputError("sample_rate must be positive")
        if self.window not in WINDOWS:
            raise InvalidInputError(f"unknown window {self.window!r}")

    @property
    def n_freqs(self) -> int:
        return self.fft_size // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.fft_size:
            return 0
        return (n_samples - self.fft_size) // self.hop + 1

    def bin_hz(self) -> np.ndarray:
        """Centre frequency of every one-sided bin, in Hz."""
        return np.arange(self.n_freqs) * self.sample_rate / self.fft_size

    def omega(self) -> np.ndarray:
        """Angular frequency of every bin, in rad/s."""
        return 2.0 * np.pi * self.bin_hz()


def window(cfg: StftConfig) -> np.ndarray:
    # periodic Hann; its square root squared overlap-adds to a constant
    n = np.arange(cfg.fft_size)
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / cfg.fft_size)
    return np.sqrt(hann)


def is_cola(cfg: StftConfig) -> bool:
    """True when analysis*synthesis windows overlap-add to a constant."""
    w2 = window(cfg) ** 2
    acc = np.zeros(cfg.hop)
    for start in range(0, cfg.fft_size, cfg.hop):
        acc += w2[start:start + cfg.hop]
    return bool(np.allclose(acc, acc[0], rtol=1e-12, atol=1e-12))


@dataclass
class Spectrogram:
    """Complex one-sided STFT, ``bins`` shaped (F, T)."""

    bins: np.ndarray
    cfg: StftConfig = field(default_factory=StftConfig)
    n_samples: int | None = None

    @property
    def shape(self):
        return self.bins.shape

    def with_bins(self, bins: np.ndarray) -> "Spectrogram":
        return Spectrogram(bins, self.cfg, self.n_samples)


def stft(x, cfg: StftConfig) -> Spectrogram:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError("stft expects a mono signal")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("signal contains non-finite samples")
    n_frames = cfg.n_frames(len(x))
    if n_frames == 0:
        raise InvalidInputError(
            f"signal of {len(x)} samples is shorter than one frame ({cfg.fft_size})")
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.fft_size)[::cfg.hop][:n_frames]
    bins = np.fft.rfft(frames * window(cfg), axis=1).T
    return Spectrogram(np.ascontiguousarray(bins), cfg, len(x))


def istft(spec: Spectrogram, length: int | None = None, cfg: StftConfig | None = None) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`stft`.

    The output is divided by the overlap-added squared window so samples
    near the edges are recovered as well as the interior; samples no frame
    covers are zero.
    """
    if cfg is not None and cfg != spec.cfg:
        raise InvalidInputError("spectrogram was produced with a different StftConfig")
    cfg = spec.cfg
    bins = np.asarray(spec.bins)
    if bins.ndim != 2 or bins.shape[0] != cfg.n_freqs:
        raise InvalidInputError(
            f"expected {cfg.n_freqs} frequency rows, got shape {bins.shape}")
    n_frames = bins.shape[1]
    covered = (n_frames - 1) * cfg.hop + cfg.fft_size if n_frames else 0
    if length is None:
        length = spec.n_samples if spec.n_samples is not None else covered
    w = window(cfg)
    frames = np.fft.irfft(bins.T, n=cfg.fft_size, axis=1) * w
    out = np.zeros(max(length, covered))
    wsum = np.zeros_like(out)
    for m in range(n_frames):
        start = m * cfg.hop
        out[start:start + cfg.fft_size] += frames[m]
        wsum[start:start + cfg.fft_size] += w * w
    nz = wsum > 1e-10
    out[nz] /= wsum[nz]
    return out[:length]
