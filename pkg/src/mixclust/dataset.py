"""Dataset materialisation: stereo mixtures, weighted references and a JSONL manifest."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import GENDERS, Speaker
from .errors import ConfigError, InvalidInputError
from .spatial import Geometry, render_stereo_mixture, sample_scene
from .wavio import read_wav, write_wav

log = logging.getLogger(__name__)

SPLITS = ("train", "eval", "test")
GENDER_GROUPS = ("f", "m", "fm")
MANIFEST_NAME = "manifest.jsonl"
SOURCE_RMS = 0.1


@dataclass(frozen=True)
class DatasetSpec:
    n_sources: int = 2
    gender_group: str = "fm"
    counts: dict = field(default_factory=lambda: {"train": 5400, "eval": 900, "test": 1800})
    clip_seconds: float = 2.0

    def __post_init__(self):
        if self.n_sources < 1:
            raise ConfigError("n_sources must be >= 1")
        if self.gender_group not in GENDER_GROUPS:
            raise ConfigError(f"gender group must be one of {GENDER_GROUPS}")
        if self.gender_group == "fm" and self.n_sources < 2:
            raise ConfigError("a mixed-gender group needs at least two sources")
        if set(self.counts) - set(SPLITS) or any(v < 0 for v in self.counts.values()):
            raise ConfigError(f"counts must map {SPLITS} to non-negative integers")


@dataclass
class ManifestEntry:
    id: str
    mixture_path: str
    source_paths: list
    angles: list
    delays_us: list
    weights: list
    split: str
    gender_group: str
    n_sources: int
    seed: int
    speakers: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=False)


@dataclass
class DatasetManifest:
    entries: list
    root: Path

    def split(self, name: str) -> list:
        return [e for e in self.entries if e.split == name]

    def resolve(self, rel: str) -> Path:
        return self.root / rel

    def load_mixture(self, entry: ManifestEntry, sample_rate: int) -> np.ndarray:
        x, _ = read_wav(self.resolve(entry.mixture_path), expected_rate=sample_rate)
        if x.ndim == 1:
            raise InvalidInputError(f"{entry.mixture_path} is mono, expected stereo")
        return x

    def load_references(self, entry: ManifestEntry, sample_rate: int) -> list:
        return [read_wav(self.resolve(p), expected_rate=sample_rate)[0]
                for p in entry.source_paths]

    def write(self, path=None) -> Path:
        path = Path(path) if path else self.root / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            for e in self.entries:
                fh.write(e.to_json() + "\n")
        return path


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise ConfigError(f"manifest not found: {path}")
    entries = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                entries.append(ManifestEntry(**json.loads(line)))
    return DatasetManifest(entries, path.parent)


def _required_genders(group: str, n: int, rng) -> list:
    if group in ("f", "m"):
        return [group] * n
    # at least one of each, remainder random
    genders = ["f", "m"] + [GENDERS[i] for i in rng.integers(0, 2, size=n - 2)]
    rng.shuffle(genders)
    return genders


def partition_speakers(speakers, spec: DatasetSpec, rng) -> dict:
    """Split speakers into disjoint pools, one per split with a non-zero count."""
    active = [s for s in SPLITS if spec.counts.get(s, 0) > 0]
    needed = {"f": 0, "m": 0}
    if spec.gender_group in ("f", "m"):
        needed[spec.gender_group] = spec.n_sources
    else:
        needed = {"f": spec.n_sources - 1, "m": spec.n_sources - 1}
    pools = {s: [] for s in SPLITS}
    for g in GENDERS:
        group = sorted((s for s in speakers if s.gender == g), key=lambda s: s.id)
        if needed[g] == 0:
            continue
        if len(group) < needed[g] * len(active):
            raise ConfigError(
                f"need {needed[g]} '{g}' speakers in each of {len(active)} splits, "
                f"corpus has {len(group)}")
        order = rng.permutation(len(group))
        group = [group[i] for i in order]
        weights = np.array([spec.counts[s] for s in active], dtype=float)
        # guarantee the minimum per split, hand out the rest proportionally
        extra = len(group) - needed[g] * len(active)
        share = np.floor(extra * weights / weights.sum()).astype(int)
        share[np.argmax(weights)] += extra - share.sum()
        start = 0
        for s, k in zip(active, share):
            size = needed[g] + int(k)
            pools[s].extend(group[start:start + size])
            start += size
    return pools


def _clip_seed(seed: int, split_index: int, idx: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(split_index, idx))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _make_clip(corpus, pool: list, spec: DatasetSpec, geom: Geometry, split: str,
               idx: int, clip_seed: int, out_dir: Path, fmt: str) -> ManifestEntry:
    rng = np.random.default_rng(clip_seed)
    n_samples = int(round(spec.clip_seconds * geom.sample_rate))
    genders = _required_genders(spec.gender_group, spec.n_sources, rng)
    chosen: list[Speaker] = []
    for g in genders:
        candidates = [s for s in pool if s.gender == g and s not in chosen]
        chosen.append(candidates[int(rng.integers(len(candidates)))])
    sources = [SOURCE_RMS * corpus.utterance(s, rng, n_samples, geom.sample_rate)
               for s in chosen]
    scene = sample_scene(rng, spec.n_sources, geom)
    mix = render_stereo_mixture(sources, scene, geom.sample_rate, [s.id for s in chosen])
    clip_id = f"{split}-{spec.gender_group}{spec.n_sources}-{idx:05d}"
    rel_mix = f"{split}/{clip_id}.mix.wav"
    write_wav(out_dir / rel_mix, mix.stereo(), geom.sample_rate, fmt)
    rel_refs = []
    for i, ref in enumerate(mix.references):
        rel = f"{split}/{clip_id}.ref{i}.wav"
        write_wav(out_dir / rel, ref, geom.sample_rate, fmt)
        rel_refs.append(rel)
    return ManifestEntry(
        id=clip_id, mixture_path=rel_mix, source_paths=rel_refs,
        angles=scene.angles.tolist(), delays_us=(scene.delays * 1e6).tolist(),
        weights=scene.weights.tolist(), split=split, gender_group=spec.gender_group,
        n_sources=spec.n_sources, seed=clip_seed, speakers=[s.id for s in chosen])


def generate_dataset(corpus, spec: DatasetSpec, out_dir, seed: int = 0,
                     geom: Geometry | None = None, threads: int = 1,
                     fmt: str = "float32") -> DatasetManifest:
    """Write every clip of ``spec`` under ``out_dir`` and return the manifest.

    Each clip depends only on ``(seed, split, index)``, so re-running with
    the same arguments reproduces the files byte for byte.
    """
    geom = geom or Geometry()
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create {out_dir}: {exc}") from exc
    pools = partition_speakers(corpus.speakers, spec, np.random.default_rng(seed))
    jobs = []
    for si, split in enumerate(SPLITS):
        for idx in range(spec.counts.get(split, 0)):
            jobs.append((split, idx, _clip_seed(seed, si, idx)))

    def run(job):
        split, idx, clip_seed = job
        return _make_clip(corpus, pools[split], spec, geom, split, idx, clip_seed, out_dir, fmt)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            entries = list(ex.map(run, jobs))
    else:
        entries = [run(j) for j in jobs]
    manifest = DatasetManifest(entries, out_dir)
    manifest.write()
    log.info("wrote %d clips to %s", len(entries), out_dir)
    return manifest
