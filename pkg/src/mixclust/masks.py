"""Training targets (DS, BPD, RPD) and binary-mask application.

Every target is vectorised column-major over the (F, T) grid: the row for
bin ``(f, m)`` is ``m * F + f``. :func:`vec` and :func:`unvec` are the only
places that encode this order.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import kmeans
from .dsp import Spectrogram
from .errors import InvalidInputError
from .features import NpdMap

TARGET_KINDS = ("DS", "BPD", "RPD")
_MASK_MAGIC = b"MXMK"


def vec(grid: np.ndarray) -> np.ndarray:
    """(F, T, ...) -> (F*T, ...) with frequency varying fastest."""
    grid = np.asarray(grid)
    f, t = grid.shape[:2]
    return np.swapaxes(grid, 0, 1).reshape((f * t,) + grid.shape[2:])


def unvec(rows: np.ndarray, n_freqs: int, n_frames: int) -> np.ndarray:
    rows = np.asarray(rows)
    return np.swapaxes(rows.reshape((n_frames, n_freqs) + rows.shape[1:]), 0, 1)


@dataclass
class BinaryMask:
    assignments: np.ndarray  # (F, T) ints in [0, n_sources)
    n_sources: int

    def __post_init__(self):
        a = np.asarray(self.assignments)
        if a.ndim != 2:
            raise InvalidInputError("mask assignments must be an (F, T) grid")
        if a.size and (a.min() < 0 or a.max() >= self.n_sources):
            raise InvalidInputError("mask assignment out of range")
        self.assignments = a.astype(np.int64)

    @property
    def shape(self):
        return self.assignments.shape

    def one_hot(self) -> np.ndarray:
        return (self.assignments[..., None] == np.arange(self.n_sources)).astype(np.float64)

    def to_target(self, kind: str) -> "PartitionTarget":
        return PartitionTarget(kind, vec(self.one_hot()))

    def agreement(self, other: "BinaryMask", weights=None) -> float:
        """Fraction of bins labelled alike under the best label permutation."""
        from itertools import permutations
        if self.shape != other.shape or self.n_sources != other.n_sources:
            raise InvalidInputError("masks are not comparable")
        w = np.ones(self.shape) if weights is None else np.asarray(weights, dtype=float)
        best = 0.0
        for perm in permutations(range(self.n_sources)):
            mapped = np.asarray(perm)[other.assignments]
            best = max(best, float(w[mapped == self.assignments].sum()))
        return best / float(w.sum())


@dataclass
class PartitionTarget:
    kind: str
    matrix: np.ndarray  # (L, C)

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise InvalidInputError(f"unknown target kind {self.kind!r}")
        if self.matrix.ndim != 2:
            raise InvalidInputError("target matrix must be (L, C)")


def dominant_source_mask(sources, weights=None) -> BinaryMask:
    """Label each bin with the source of largest weighted magnitude (lowest index on ties)."""
    mags = [np.abs(s.bins if isinstance(s, Spectrogram) else s) for s in sources]
    if not mags:
        raise InvalidInputError("need at least one source")
    if len({m.shape for m in mags}) != 1:
        raise InvalidInputError("source spectrograms differ in shape")
    weights = np.ones(len(mags)) if weights is None else np.asarray(weights, dtype=float)
    if len(weights) != len(mags):
        raise InvalidInputError("one weight per source required")
    stacked = np.stack([w * m for w, m in zip(weights, mags)])
    return BinaryMask(np.argmax(stacked, axis=0), len(mags))


def bpd_mask(npd: NpdMap, n_sources: int, rng=None, restarts: int = 10,
             max_delay: float | None = None, label_npd: NpdMap | None = None) -> BinaryMask:
    """Cluster the valid NPD values into ``n_sources`` groups.

    Labels are ordered by ascending centroid delay. With ``max_delay`` set,
    readings beyond the physically possible delay are clipped to it first so
    a handful of noisy low-frequency bins cannot claim a cluster.

    Centroids are fitted on ``npd``'s valid bins only. If ``label_npd`` is
    given (typically the same map without a silence floor), every bin it
    marks valid is labelled by its own value against those centroids.
    Remaining bins take the label of the centroid nearest to zero delay.
    """
    if n_sources < 1:
        raise InvalidInputError("n_sources must be >= 1")
    vals = npd.valid_values()
    if len(vals) < n_sources:
        raise InvalidInputError(f"only {len(vals)} valid NPD bins for {n_sources} sources")
    if label_npd is not None and label_npd.shape != npd.shape:
        raise InvalidInputError("label map and NPD map differ in shape")

    def scaled(v):
        # microseconds keep the 1-D problem well scaled
        return (np.clip(v, -max_delay, max_delay) if max_delay is not None else v) * 1e6

    res = kmeans(scaled(vals), n_sources, restarts=restarts, rng=rng)
    order = np.argsort(res.centroids[:, 0], kind="stable")
    relabel = np.empty(n_sources, dtype=np.int64)
    relabel[order] = np.arange(n_sources)
    centroids = res.centroids[order, 0]
    assign = np.full(npd.shape, int(np.argmin(np.abs(centroids))), dtype=np.int64)
    if label_npd is not None:
        extra = label_npd.valid & ~npd.valid
        d = np.abs(scaled(label_npd.values[extra])[:, None] - centroids[None, :])
        assign[extra] = np.argmin(d, axis=1)
    assign[npd.valid] = relabel[res.assignments]
    return BinaryMask(assign, n_sources)


def rpd_target(npd: NpdMap, max_delay: float | None = None,
               label_npd: NpdMap | None = None) -> PartitionTarget:
    """Raw phase-difference column, standardised over the valid bins.

    ``max_delay`` clips readings to the physically possible range before
    standardising; unclipped, a few low-frequency bins hundreds of
    microseconds out dominate the whole target. ``label_npd`` supplies
    values for bins outside ``npd``'s valid set, as in :func:`bpd_mask`.
    Bins with no value at all are set to 0, the clip mean after centring.
    """
    if label_npd is not None and label_npd.shape != npd.shape:
        raise InvalidInputError("label map and NPD map differ in shape")
    lim = np.inf if max_delay is None else max_delay
    vals = np.clip(npd.valid_values(), -lim, lim)
    if len(vals) == 0:
        return PartitionTarget("RPD", np.zeros((npd.values.size, 1)))
    mu, sd = vals.mean(), vals.std()
    src = label_npd if label_npd is not None else npd
    valid = src.valid | npd.valid
    raw = np.where(npd.valid, npd.values, src.values)
    z = (np.clip(raw, -lim, lim) - mu) / (sd if sd > 0 else 1.0)
    z = np.where(valid, z, 0.0)
    return PartitionTarget("RPD", vec(z)[:, None])


def apply_mask(mixture: Spectrogram, mask: BinaryMask) -> list:
    if mixture.shape != mask.shape:
        raise InvalidInputError(f"mask {mask.shape} does not match spectrogram {mixture.shape}")
    out = []
    for i in range(mask.n_sources):
        out.append(mixture.with_bins(np.where(mask.assignments == i, mixture.bins, 0)))
    return out


def write_mask(path, mask: BinaryMask) -> Path:
    if mask.n_sources > 255:
        raise InvalidInputError("mask format stores at most 255 sources")
    f, t = mask.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_MASK_MAGIC + struct.pack("<III", f, t, mask.n_sources))
        fh.write(vec(mask.assignments).astype(np.uint8).tobytes())
    return path


def read_mask(path) -> BinaryMask:
    raw = Path(path).read_bytes()
    if raw[:4] != _MASK_MAGIC:
        raise InvalidInputError(f"{path}: not a mask file")
    f, t, n = struct.unpack("<III", raw[4:16])
    body = np.frombuffer(raw[16:], dtype=np.uint8)
    if body.size != f * t:
        raise InvalidInputError(f"{path}: truncated mask")
    return BinaryMask(unvec(body, f, t).astype(np.int64), n)
