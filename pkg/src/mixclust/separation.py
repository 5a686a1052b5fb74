"""Single-channel separation with a trained embedding network."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import kmeans
from .dsp import StftConfig, istft, stft
from .errors import InvalidInputError
from .masks import BinaryMask, apply_mask, unvec
from .model.checkpoint import Checkpoint
from .model.network import EmbeddingNetwork, NetConfig, input_features
from .wavio import write_wav


@dataclass
class SeparationResult:
    sources: list
    mask: BinaryMask
    embedding_inertia: float


class Separator:
    """Holds the network rebuilt from a checkpoint so it is built only once."""

    def __init__(self, ckpt: Checkpoint):
        self.net = EmbeddingNetwork(NetConfig(**ckpt.net_config),
                                    {k: v.copy() for k, v in ckpt.params.items()})
        self.stft_cfg = StftConfig(**ckpt.stft_config) if ckpt.stft_config else StftConfig()
        self.label = f"DC {ckpt.target_kind}"

    def embed(self, mixture) -> tuple:
        spec = stft(mixture, self.stft_cfg)
        return spec, self.net.forward(input_features(np.abs(spec.bins)))

    def separate(self, mixture, sample_rate: int, n_sources: int, rng=None,
                 restarts: int = 10) -> SeparationResult:
        x = np.asarray(mixture, dtype=np.float64)
        if x.ndim != 1:
            raise InvalidInputError("separation takes a mono signal; select a channel first")
        if sample_rate != self.stft_cfg.sample_rate:
            raise InvalidInputError(
                f"sample rate {sample_rate} Hz, model expects {self.stft_cfg.sample_rate} Hz")
        if n_sources < 1:
            raise InvalidInputError("n_sources must be >= 1")
        spec, V = self.embed(x)
        res = kmeans(V, n_sources, restarts=restarts,
                     rng=rng if rng is not None else np.random.default_rng(0))
        F, T = spec.shape
        mask = BinaryMask(unvec(res.assignments, F, T), n_sources)
        outs = [istft(s, length=len(x)) for s in apply_mask(spec, mask)]
        return SeparationResult(outs, mask, res.inertia)


def separate(ckpt: Checkpoint, mixture, sample_rate: int, n_sources: int,
             rng=None) -> SeparationResult:
    return Separator(ckpt).separate(mixture, sample_rate, n_sources, rng)


def write_sources(result: SeparationResult, out_dir, mixture_id: str, sample_rate: int) -> list:
    out_dir = Path(out_dir)
    return [write_wav(out_dir / f"{mixture_id}.src{i}.wav", s, sample_rate)
            for i, s in enumerate(result.sources)]
