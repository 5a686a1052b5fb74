"""Checkpoint file format.

    magic  b"MXCLCKPT"
    u32    format version
    u64    header length, then a UTF-8 JSON header
    tensors, little-endian float64, in header order

The JSON header carries configs, the loss history, the dataset fingerprint
and the name/shape of every tensor, so files round-trip bit for bit.
"""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError

MAGIC = b"MXCLCKPT"
VERSION = 1


@dataclass
class Checkpoint:
    params: dict
    net_config: dict
    train_config: dict = field(default_factory=dict)
    stft_config: dict = field(default_factory=dict)
    loss_history: list = field(default_factory=list)
    dataset_fingerprint: str = ""
    epochs_done: int = 0
    optimizer_step: int = 0
    optimizer_state: dict = field(default_factory=dict)

    @property
    def target_kind(self) -> str:
        return self.train_config.get("target_kind", "?")


def save_checkpoint(path, ckpt: Checkpoint) -> Path:
    path = Path(path)
    tensors = {f"param.{k}": v for k, v in ckpt.params.items()}
    tensors.update({f"opt.{k}": v for k, v in ckpt.optimizer_state.items()})
    header = {
        "net_config": ckpt.net_config,
        "train_config": ckpt.train_config,
        "stft_config": ckpt.stft_config,
        "loss_history": [float(x) for x in ckpt.loss_history],
        "dataset_fingerprint": ckpt.dataset_fingerprint,
        "epochs_done": ckpt.epochs_done,
        "optimizer_step": ckpt.optimizer_step,
        "tensors": [[k, list(np.shape(v))] for k, v in tensors.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(blob)))
        fh.write(blob)
        for v in tensors.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())
    tmp.replace(path)
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise InvalidInputError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack("<IQ", raw[8:20])
    if version != VERSION:
        raise InvalidInputError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[20:20 + hlen])
    offset = 20 + hlen
    params, opt = {}, {}
    for name, shape in header["tensors"]:
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=n, offset=offset).reshape(shape).copy()
        offset += 8 * n
        if name.startswith("param."):
            params[name[len("param."):]] = arr
        else:
            opt[name[len("opt."):]] = arr
    if offset != len(raw):
        raise InvalidInputError(f"{path}: trailing or missing tensor data")
    return Checkpoint(params, header["net_config"], header["train_config"],
                      header["stft_config"], header["loss_history"],
                      header["dataset_fingerprint"], header["epochs_done"],
                      header["optimizer_step"], opt)


def write_loss_history(path, history) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss"])
        for i, v in enumerate(history, 1):
            w.writerow([i, repr(float(v))])
    return path
