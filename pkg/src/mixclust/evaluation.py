"""Batch SDR evaluation of checkpoints and oracle masks."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsp import StftConfig, istft, stft
from .errors import ConfigError
from .features import normalized_phase_difference
from .masks import apply_mask, bpd_mask, dominant_source_mask
from .metrics import resolve_permutation, sdr
from .seeding import substream
from .separation import Separator
from .spatial import Geometry

CSV_FIELDS = ["mixture_id", "method", "source_index", "sdr_db", "initial_sdr_db",
              "improvement_db", "n_sources", "gender_group"]
ORACLES = {"oracle-DS": "DS oracle", "oracle-BPD": "BPD oracle", "initial": "Initial"}


def _stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"n": 0}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"n": int(v.size), "mean": float(v.mean()), "median": float(med),
            "q1": float(q1), "q3": float(q3), "iqr": float(q3 - q1)}


def box_stats(values) -> dict:
    """Median, quartiles, 1.5*IQR whiskers and the raw points."""
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo = v[v >= q1 - 1.5 * iqr].min()
    hi = v[v <= q3 + 1.5 * iqr].max()
    return {"median": float(med), "q1": float(q1), "q3": float(q3),
            "whisker_lo": float(lo), "whisker_hi": float(hi), "points": v.tolist()}


@dataclass
class SdrReport:
    method: str
    rows: list = field(default_factory=list)

    def column(self, name: str, gender_group: str | None = None) -> np.ndarray:
        return np.array([r[name] for r in self.rows
                         if gender_group in (None, "all") or r["gender_group"] == gender_group])

    def sdrs(self) -> np.ndarray:
        return self.column("sdr_db")

    def improvements(self) -> np.ndarray:
        return self.column("improvement_db")

    def summary(self) -> dict:
        groups = sorted({r["gender_group"] for r in self.rows})
        out = {}
        for g in groups + ["all"]:
            out[g] = {"sdr": _stats(self.column("sdr_db", g)),
                      "improvement": _stats(self.column("improvement_db", g))}
        return out

    def to_csv(self, path, append: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        new = not (append and path.exists())
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            if new:
                w.writeheader()
            for r in self.rows:
                w.writerow(r)
        return path

    @classmethod
    def from_csv(cls, path) -> list:
        reports = {}
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                row = {"mixture_id": r["mixture_id"], "method": r["method"],
                       "source_index": int(r["source_index"]),
                       "sdr_db": float(r["sdr_db"]), "initial_sdr_db": float(r["initial_sdr_db"]),
                       "improvement_db": float(r["improvement_db"]),
                       "n_sources": int(r["n_sources"]), "gender_group": r["gender_group"]}
                reports.setdefault(r["method"], cls(r["method"])).rows.append(row)
        return list(reports.values())


def write_boxplot_data(path, reports) -> Path:
    data = {r.method: {"sdr": box_stats(r.sdrs()), "improvement": box_stats(r.improvements())}
            for r in reports if r.rows}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=1))
    return path


def _estimates(method, separator, stereo, refs, n_sources, stft_cfg, geom, rng):
    mic1 = stereo[:, 0]
    if method == "checkpoint":
        return separator.separate(mic1, stft_cfg.sample_rate, n_sources, rng).sources
    if method == "initial":
        return None
    M1 = stft(mic1, stft_cfg)
    if method == "oracle-DS":
        if len(refs) != n_sources:
            raise ConfigError("oracle-DS needs one reference per source")
        mask = dominant_source_mask([stft(r, stft_cfg) for r in refs])
    elif method == "oracle-BPD":
        npd = normalized_phase_difference(M1, stft(stereo[:, 1], stft_cfg))
        mask = bpd_mask(npd, n_sources, rng, max_delay=geom.max_delay)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return [istft(s, length=len(mic1)) for s in apply_mask(M1, mask)]


def evaluate(method: str, manifest, n_sources: int | None = None, checkpoint=None,
             split: str = "test", seed: int = 0, stft_cfg: StftConfig | None = None,
             geom: Geometry | None = None, threads: int = 1, limit: int | None = None) -> SdrReport:
    """Score ``method`` on every clip of ``split``.

    ``method`` is ``checkpoint`` (single-channel separation of mic 1),
    ``oracle-DS``, ``oracle-BPD`` or ``initial`` (the unprocessed mixture).
    ``n_sources`` defaults to each clip's own source count.
    """
    separator = None
    if method == "checkpoint":
        if checkpoint is None:
            raise ConfigError("method 'checkpoint' needs a checkpoint")
        separator = Separator(checkpoint)
        stft_cfg = separator.stft_cfg
        label = separator.label
    elif method in ORACLES:
        label = ORACLES[method]
    else:
        raise ConfigError(f"unknown method {method!r}")
    stft_cfg = stft_cfg or StftConfig()
    geom = geom or Geometry(sample_rate=stft_cfg.sample_rate)
    entries = manifest.split(split)[:limit]
    if not entries:
        raise ConfigError(f"dataset has no '{split}' clips")

    def run(entry):
        if not entry.source_paths:
            raise ConfigError(f"{entry.id}: no reference files")
        stereo = manifest.load_mixture(entry, stft_cfg.sample_rate)
        refs = manifest.load_references(entry, stft_cfg.sample_rate)
        k = n_sources or entry.n_sources
        initial = np.array([sdr(stereo[:, 0], r) for r in refs])
        est = _estimates(method, separator, stereo, refs, k, stft_cfg, geom,
                         substream(seed, f"kmeans/{entry.id}"))
        if est is None:
            scores = initial
        elif len(est) == len(refs):
            _, scores = resolve_permutation(est, refs)
        else:
            # unequal counts: each reference takes its best-matching estimate
            scores = np.array([max(sdr(e, r) for e in est) for r in refs])
        return [{"mixture_id": entry.id, "method": label, "source_index": i,
                 "sdr_db": float(s), "initial_sdr_db": float(s0),
                 "improvement_db": float(s - s0), "n_sources": entry.n_sources,
                 "gender_group": entry.gender_group}
                for i, (s, s0) in enumerate(zip(scores, initial))]

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            chunks = list(ex.map(run, entries))
    else:
        chunks = [run(e) for e in entries]
    return SdrReport(label, [r for c in chunks for r in c])
