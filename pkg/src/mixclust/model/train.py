"""Training loop: targets from each clip, factored loss, BPTT, Adam."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..dsp import StftConfig, stft
from ..errors import ConfigError, InvalidInputError, TrainingDivergedError
from ..features import DEFAULT_SILENCE_FLOOR_DB, normalized_phase_difference
from ..masks import TARGET_KINDS, PartitionTarget, bpd_mask, dominant_source_mask, rpd_target
from ..seeding import substream
from ..spatial import Geometry
from .checkpoint import Checkpoint
from .loss import dc_loss_and_grad
from .network import EmbeddingNetwork, NetConfig, input_features
from .optim import Adam, clip_by_global_norm

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    target_kind: str = "BPD"
    learning_rate: float = 5e-4
    epochs: int = 20
    batch_size: int = 1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    silence_floor: float = DEFAULT_SILENCE_FLOOR_DB
    kmeans_restarts: int = 10

    def __post_init__(self):
        if self.target_kind not in TARGET_KINDS:
            raise ConfigError(f"target_kind must be one of {TARGET_KINDS}")
        if self.learning_rate < 0 or self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("learning_rate/epochs must be >= 0 and batch_size >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def build_target(kind: str, mic1, mic2=None, references=None, stft_cfg: StftConfig = None,
                 n_sources: int = 2, rng=None, geom: Geometry | None = None,
                 silence_floor: float = DEFAULT_SILENCE_FLOOR_DB,
                 kmeans_restarts: int = 10) -> PartitionTarget:
    stft_cfg = stft_cfg or StftConfig()
    if kind == "DS":
        if not references:
            raise ConfigError("DS targets need clean references")
        return dominant_source_mask([stft(r, stft_cfg) for r in references]).to_target("DS")
    if mic2 is None:
        raise InvalidInputError(f"{kind} targets need a stereo mixture")
    m1, m2 = stft(mic1, stft_cfg), stft(mic2, stft_cfg)
    # the floor decides which bins fit the statistics; targets cover every bin
    npd = normalized_phase_difference(m1, m2, silence_floor)
    every_bin = normalized_phase_difference(m1, m2, -np.inf)
    max_delay = geom.max_delay if geom is not None else None
    if kind == "BPD":
        return bpd_mask(npd, n_sources, rng, kmeans_restarts, max_delay,
                        label_npd=every_bin).to_target("BPD")
    if kind == "RPD":
        return rpd_target(npd, max_delay, label_npd=every_bin)
    raise ConfigError(f"unknown target kind {kind!r}")


def dataset_fingerprint(entries, kind: str) -> str:
    h = hashlib.sha256(kind.encode())
    for e in entries:
        h.update(e.to_json().encode())
    return h.hexdigest()


def _prepare(manifest, entries, cfg: TrainConfig, stft_cfg, geom):
    clips = []
    for e in entries:
        stereo = manifest.load_mixture(e, stft_cfg.sample_rate)
        mic1, mic2 = stereo[:, 0], stereo[:, 1]
        refs = None
        if cfg.target_kind == "DS":
            if not e.source_paths:
                raise ConfigError(f"{e.id}: DS training needs reference files")
            refs = manifest.load_references(e, stft_cfg.sample_rate)
        Y = build_target(cfg.target_kind, mic1, mic2, refs, stft_cfg, e.n_sources,
                         substream(cfg.seed, f"kmeans/{e.id}"), geom, cfg.silence_floor,
                         cfg.kmeans_restarts)
        X = input_features(np.abs(stft(mic1, stft_cfg).bins))
        clips.append((X, Y.matrix))
    return clips


def _snapshot(net, opt, cfg, stft_cfg, history, fingerprint, epochs_done) -> Checkpoint:
    return Checkpoint(
        params={k: v.copy() for k, v in net.params.items()},
        net_config=net.cfg.to_dict(), train_config=cfg.to_dict(),
        stft_config=asdict(stft_cfg), loss_history=list(history),
        dataset_fingerprint=fingerprint, epochs_done=epochs_done,
        optimizer_step=opt.step_count,
        optimizer_state={k: v.copy() for k, v in opt.state().items()})


def train(manifest, cfg: TrainConfig, net_cfg: NetConfig | None = None,
          stft_cfg: StftConfig | None = None, geom: Geometry | None = None,
          resume: Checkpoint | None = None, split: str = "train",
          on_epoch=None) -> Checkpoint:
    """Train on ``manifest``'s ``split`` until ``cfg.epochs`` epochs are done.

    The per-clip objective is the affinity loss divided by L**2 so gradient
    clipping and the reported history do not depend on clip length. Passing
    ``resume`` continues from its parameters, optimizer state and epoch.
    """
    stft_cfg = stft_cfg or StftConfig()
    geom = geom or Geometry(sample_rate=stft_cfg.sample_rate)
    entries = manifest.split(split)
    if not entries:
        raise ConfigError(f"dataset has no '{split}' clips")
    fingerprint = dataset_fingerprint(entries, cfg.target_kind)
    if resume is not None:
        net = EmbeddingNetwork(NetConfig(**resume.net_config),
                               {k: v.copy() for k, v in resume.params.items()})
        history = list(resume.loss_history)
        start_epoch = resume.epochs_done
    else:
        net_cfg = net_cfg or NetConfig(n_freqs=stft_cfg.n_freqs)
        if net_cfg.n_freqs != stft_cfg.n_freqs:
            raise ConfigError("network n_freqs does not match the STFT size")
        net = EmbeddingNetwork(net_cfg, rng=substream(cfg.seed, "init"))
        history = []
        start_epoch = 0
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    if resume is not None and resume.optimizer_state:
        opt.load_state(resume.optimizer_state, resume.optimizer_step)

    clips = _prepare(manifest, entries, cfg, stft_cfg, geom)
    last_good = _snapshot(net, opt, cfg, stft_cfg, history, fingerprint, start_epoch)
    for epoch in range(start_epoch, cfg.epochs):
        order = substream(cfg.seed, f"shuffle/{epoch}").permutation(len(clips))
        drop_rng = substream(cfg.seed, f"dropout/{epoch}")
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grads = None
            for idx in batch:
                X, Y = clips[idx]
                V, cache = net.forward(X, train=True, rng=drop_rng)
                scale = 1.0 / float(V.shape[0]) ** 2
                loss, dV = dc_loss_and_grad(V, Y)
                loss *= scale
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch + 1}", last_good)
                g = net.backward(cache, dV * (scale / len(batch)))
                grads = g if grads is None else {k: grads[k] + g[k] for k in grads}
                losses.append(loss)
            norm = clip_by_global_norm(grads, cfg.clip_norm)
            if not np.isfinite(norm):
                raise TrainingDivergedError(f"non-finite gradient at epoch {epoch + 1}", last_good)
            opt.step(net.params, grads)
            net.mark_updated()
        history.append(float(np.mean(losses)))
        log.info("epoch %d/%d  loss %.5f", epoch + 1, cfg.epochs, history[-1])
        last_good = _snapshot(net, opt, cfg, stft_cfg, history, fingerprint, epoch + 1)
        if on_epoch is not None:
            on_epoch(epoch + 1, last_good)
    return last_good
