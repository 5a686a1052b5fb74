"""WAV reading/writing (16-bit PCM and 32-bit float, mono or stereo)."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import InvalidInputError


def read_wav(path, expected_rate: int | None = None) -> tuple[np.ndarray, int]:
    """Return ``(samples, rate)`` with samples as float64 in [-1, 1].

    Stereo files come back shaped (n_samples, 2).
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"no such file: {path}")
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc
    if expected_rate is not None and rate != expected_rate:
        raise InvalidInputError(f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz")
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        x = data.astype(np.float64)
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    else:
        raise InvalidInputError(f"{path}: unsupported sample format {data.dtype}")
    if x.ndim == 2 and x.shape[1] > 2:
        raise InvalidInputError(f"{path}: {x.shape[1]} channels, at most 2 supported")
    return x, int(rate)


def write_wav(path, samples, rate: int, fmt: str = "float32") -> Path:
    """Write mono (n,) or stereo (n, 2) samples. ``fmt`` is ``float32`` or ``pcm16``."""
    path = Path(path)
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim not in (1, 2) or (x.ndim == 2 and x.shape[1] not in (1, 2)):
        raise InvalidInputError(f"cannot write array of shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("refusing to write non-finite samples")
    if fmt == "float32":
        data = x.astype("<f4")
    elif fmt == "pcm16":
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    else:
        raise InvalidInputError(f"unknown WAV format {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, int(rate), data)
    return path
