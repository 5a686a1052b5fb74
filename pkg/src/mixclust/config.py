"""Pipeline configuration stored as YAML.

Values resolve as command-line flag > config file > built-in default.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .dataset import DatasetSpec
from .dsp import StftConfig
from .errors import ConfigError, MixclustError
from .model.network import NetConfig
from .model.train import TrainConfig
from .spatial import Geometry


@dataclass(frozen=True)
class CorpusConfig:
    source: str = "synthetic"  # or a directory of <speaker>/*.wav
    n_speakers_per_gender: int = 24


@dataclass(frozen=True)
class PipelineConfig:
    geometry: Geometry = field(default_factory=Geometry)
    stft: StftConfig = field(default_factory=StftConfig)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    network: NetConfig = field(default_factory=NetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str = "runs"
    seed: int = 0

    def to_dict(self) -> dict:
        data = asdict(self)
        del data["train"]["seed"]  # the top-level seed drives every sub-stream
        return data

    def train_config(self) -> TrainConfig:
        return replace(self.train, seed=self.seed)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        _reject_unknown(cls, data, "")
        kwargs = {}
        for f in fields(cls):
            if f.name not in data:
                continue
            value = data[f.name]
            sub = _SECTIONS.get(f.name)
            if sub is not None:
                if not isinstance(value, dict):
                    raise ConfigError(f"section '{f.name}' must be a mapping")
                _reject_unknown(sub, value, f.name + ".")
                if f.name == "train" and "seed" in value:
                    raise ConfigError("train.seed is not configurable; set the top-level seed")
                value = _build(sub, value)
            kwargs[f.name] = value
        cfg = _build(cls, kwargs)
        cfg.check()
        return cfg

    def check(self) -> None:
        if self.network.n_freqs != self.stft.n_freqs:
            raise ConfigError(f"network.n_freqs={self.network.n_freqs} but the STFT has "
                              f"{self.stft.n_freqs} bins")
        if self.geometry.sample_rate != self.stft.sample_rate:
            raise ConfigError("geometry and STFT sample rates differ")

    def override(self, section: str | None = None, **values) -> "PipelineConfig":
        """Copy with ``values`` replaced; ``None`` values are ignored."""
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        try:
            if section is None:
                return replace(self, **values)
            return replace(self, **{section: replace(getattr(self, section), **values)})
        except MixclustError as exc:
            raise ConfigError(str(exc)) from exc


_SECTIONS = {"geometry": Geometry, "stft": StftConfig, "dataset": DatasetSpec,
             "corpus": CorpusConfig, "network": NetConfig, "train": TrainConfig}


def _reject_unknown(cls, data: dict, prefix: str) -> None:
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(prefix + k for k in extra)}")


def _build(cls, kwargs):
    try:
        return cls(**kwargs)
    except MixclustError as exc:
        raise ConfigError(str(exc)) from exc
    except TypeError as exc:
        raise ConfigError(f"bad value in config: {exc}") from exc


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return PipelineConfig.from_dict(data)


def save_config(path, cfg: PipelineConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
    return path
