"""Bidirectional recurrent embedding network with hand-written BPTT.

The recurrence runs over frames; each step sees one F-dimensional frame of
log-magnitudes. A dense head shared across frames maps the 2H recurrent
state of frame m to the F*K embedding entries of that frame, giving V of
shape (T*F, K) in the same row order as the training targets.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidInputError, InvalidStateError

CELLS = ("gru", "lstm")


@dataclass(frozen=True)
class NetConfig:
    n_freqs: int = 257
    n_layers: int = 1
    hidden: int = 32
    embed_dim: int = 16
    dropout: float = 0.3
    cell: str = "gru"
    normalize: bool = False  # unit rows stall training at the collapsed solution

    def __post_init__(self):
        if self.cell not in CELLS:
            raise InvalidInputError(f"cell must be one of {CELLS}")
        if min(self.n_freqs, self.n_layers, self.hidden, self.embed_dim) < 1:
            raise InvalidInputError("network dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidInputError("dropout must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def input_features(magnitude: np.ndarray) -> np.ndarray:
    """Log-magnitude, standardised over the whole clip."""
    mag = np.asarray(magnitude, dtype=np.float64)
    if not np.all(np.isfinite(mag)):
        raise InvalidInputError("non-finite magnitudes")
    x = np.log(mag + 1e-8)
    sd = x.std()
    return (x - x.mean()) / (sd if sd > 0 else 1.0)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# -- single-direction cells --------------------------------------------------
# Each forward returns (outputs (T, H), cache); each backward takes dL/doutputs
# and returns (dx, dW, dU, db).

def _gru_forward(x, W, U, b):
    T = x.shape[0]
    H = U.shape[0]
    A = x @ W + b
    Uzr, Un = U[:, :2 * H], U[:, 2 * H:]
    h = np.zeros(H)
    hs = np.empty((T, H))
    hprev = np.empty((T, H))
    ZR = np.empty((T, 2 * H))
    N = np.empty((T, H))
    for t in range(T):
        a = A[t]
        hprev[t] = h
        zr = 0.5 * (1.0 + np.tanh(0.5 * (a[:2 * H] + h @ Uzr)))
        z, r = zr[:H], zr[H:]
        n = np.tanh(a[2 * H:] + (r * h) @ Un)
        h = n + z * (h - n)
        ZR[t], N[t], hs[t] = zr, n, h
    return hs, (x, W, U, hprev, ZR, N)


def _gru_backward(dout, cache):
    x, W, U, hprev, ZR, N = cache
    T, H = dout.shape
    Uzr, Un = U[:, :2 * H], U[:, 2 * H:]
    dA = np.empty((T, 3 * H))
    dh_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        dh = dout[t] + dh_next
        zr, n, hp = ZR[t], N[t], hprev[t]
        z, r = zr[:H], zr[H:]
        dan = dh * (1.0 - z) * (1.0 - n * n)
        drh = Un @ dan
        dzr = np.concatenate([dh * (hp - n), drh * hp]) * zr * (1.0 - zr)
        dh_next = dh * z + drh * r + Uzr @ dzr
        dA[t, :2 * H] = dzr
        dA[t, 2 * H:] = dan
    dU = np.empty_like(U)
    dU[:, :2 * H] = hprev.T @ dA[:, :2 * H]
    dU[:, 2 * H:] = (ZR[:, H:] * hprev).T @ dA[:, 2 * H:]
    return dA @ W.T, x.T @ dA, dU, dA.sum(axis=0)


def _lstm_forward(x, W, U, b):
    T = x.shape[0]
    H = U.shape[0]
    A = x @ W + b
    h = np.zeros(H)
    c = np.zeros(H)
    hs = np.empty((T, H))
    hprev = np.empty((T, H))
    cprev = np.empty((T, H))
    G = np.empty((T, 4 * H))
    C = np.empty((T, H))
    for t in range(T):
        hprev[t], cprev[t] = h, c
        a = A[t] + h @ U
        i = _sigmoid(a[:H])
        f = _sigmoid(a[H:2 * H])
        g = np.tanh(a[2 * H:3 * H])
        o = _sigmoid(a[3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        G[t] = np.concatenate([i, f, g, o])
        C[t], hs[t] = c, h
    return hs, (x, W, U, hprev, cprev, G, C)


def _lstm_backward(dout, cache):
    x, W, U, hprev, cprev, G, C = cache
    T, H = dout.shape
    dA = np.empty((T, 4 * H))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i, f, g, o = G[t, :H], G[t, H:2 * H], G[t, 2 * H:3 * H], G[t, 3 * H:]
        tc = np.tanh(C[t])
        dh = dout[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dA[t, :H] = dc * g * i * (1.0 - i)
        dA[t, H:2 * H] = dc * cprev[t] * f * (1.0 - f)
        dA[t, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dA[t, 3 * H:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = U @ dA[t]
    return dA @ W.T, x.T @ dA, hprev.T @ dA, dA.sum(axis=0)


_CELL_FNS = {"gru": (3, _gru_forward, _gru_backward), "lstm": (4, _lstm_forward, _lstm_backward)}


class ForwardCache:
    def __init__(self, version, layer_caches, dropout_mask, hidden_out, z, norms, n_frames):
        self.version = version
        self.layer_caches = layer_caches
        self.dropout_mask = dropout_mask
        self.hidden_out = hidden_out
        self.z = z
        self.norms = norms
        self.n_frames = n_frames


class EmbeddingNetwork:
    def __init__(self, cfg: NetConfig, params: dict | None = None, rng=None):
        self.cfg = cfg
        self.version = 0
        if params is None:
            params = self.init_params(cfg, rng if rng is not None else np.random.default_rng(0))
        self.params = params
        self._check_params()

    # -- parameters ----------------------------------------------------------
    @staticmethod
    def param_shapes(cfg: NetConfig) -> dict:
        gates = _CELL_FNS[cfg.cell][0]
        shapes = {}
        in_dim = cfg.n_freqs
        for layer in range(cfg.n_layers):
            for d in ("fwd", "bwd"):
                p = f"rnn{layer}.{d}"
                shapes[f"{p}.W"] = (in_dim, gates * cfg.hidden)
                shapes[f"{p}.U"] = (cfg.hidden, gates * cfg.hidden)
                shapes[f"{p}.b"] = (gates * cfg.hidden,)
            in_dim = 2 * cfg.hidden
        shapes["dense.W"] = (2 * cfg.hidden, cfg.n_freqs * cfg.embed_dim)
        shapes["dense.b"] = (cfg.n_freqs * cfg.embed_dim,)
        return shapes

    @classmethod
    def init_params(cls, cfg: NetConfig, rng) -> dict:
        params = {}
        for name, shape in cls.param_shapes(cfg).items():
            if name == "dense.W":
                bound = np.sqrt(6.0 / (shape[0] + cfg.embed_dim))
                params[name] = rng.uniform(-bound, bound, size=shape)
            elif name == "dense.b":
                params[name] = 0.1 * rng.standard_normal(shape)
            elif name.endswith(".b"):
                b = np.zeros(shape)
                if cfg.cell == "lstm":
                    b[cfg.hidden:2 * cfg.hidden] = 1.0  # forget gate open
                params[name] = b
            else:
                bound = 1.0 / np.sqrt(cfg.hidden)
                params[name] = rng.uniform(-bound, bound, size=shape)
        return params

    @classmethod
    def zeros(cls, cfg: NetConfig) -> "EmbeddingNetwork":
        return cls(cfg, {k: np.zeros(s) for k, s in cls.param_shapes(cfg).items()})

    def _check_params(self):
        shapes = self.param_shapes(self.cfg)
        if set(shapes) != set(self.params):
            raise InvalidInputError("parameter names do not match the network config")
        for k, s in shapes.items():
            if self.params[k].shape != s:
                raise InvalidInputError(f"{k}: shape {self.params[k].shape}, expected {s}")

    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def mark_updated(self) -> None:
        self.version += 1

    # -- forward / backward --------------------------------------------------
    def forward(self, X, train: bool = False, rng=None):
        """Embed an (F, T) feature grid.

        Returns ``V`` of shape (T*F, K) in inference mode and ``(V, cache)``
        in training mode. Dropout needs ``rng`` in training mode.
        """
        X = np.asarray(X, dtype=np.float64)
        cfg = self.cfg
        if X.ndim != 2 or X.shape[0] != cfg.n_freqs:
            raise InvalidInputError(f"expected ({cfg.n_freqs}, T) features, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("non-finite network input")
        _, fwd, _ = _CELL_FNS[cfg.cell]
        seq = X.T
        caches = []
        for layer in range(cfg.n_layers):
            p = self.params
            hf, cf = fwd(seq, p[f"rnn{layer}.fwd.W"], p[f"rnn{layer}.fwd.U"], p[f"rnn{layer}.fwd.b"])
            hb, cb = fwd(seq[::-1], p[f"rnn{layer}.bwd.W"], p[f"rnn{layer}.bwd.U"],
                         p[f"rnn{layer}.bwd.b"])
            caches.append((cf, cb))
            seq = np.concatenate([hf, hb[::-1]], axis=1)
        mask = None
        if train and cfg.dropout > 0:
            if rng is None:
                raise InvalidInputError("training-mode forward with dropout needs an rng")
            keep = 1.0 - cfg.dropout
            mask = (rng.random(seq.shape) < keep) / keep
            seq = seq * mask
        T = X.shape[1]
        z = (seq @ self.params["dense.W"] + self.params["dense.b"]).reshape(T * cfg.n_freqs,
                                                                            cfg.embed_dim)
        norms = None
        if cfg.normalize:
            norms = np.sqrt(np.sum(z * z, axis=1, keepdims=True) + 1e-12)
            V = z / norms
        else:
            V = z
        if not train:
            return V
        return V, ForwardCache(self.version, caches, mask, seq, z, norms, T)

    def backward(self, cache: ForwardCache, dV) -> dict:
        if cache.version != self.version:
            raise InvalidStateError("parameters changed since the cached forward pass")
        cfg = self.cfg
        dV = np.asarray(dV, dtype=np.float64)
        if cache.norms is not None:
            V = cache.z / cache.norms
            dz = (dV - V * np.sum(V * dV, axis=1, keepdims=True)) / cache.norms
        else:
            dz = dV
        dz = dz.reshape(cache.n_frames, cfg.n_freqs * cfg.embed_dim)
        grads = {
            "dense.W": cache.hidden_out.T @ dz,
            "dense.b": dz.sum(axis=0),
        }
        dseq = dz @ self.params["dense.W"].T
        if cache.dropout_mask is not None:
            dseq = dseq * cache.dropout_mask
        _, _, bwd = _CELL_FNS[cfg.cell]
        H = cfg.hidden
        for layer in range(cfg.n_layers - 1, -1, -1):
            cf, cb = cache.layer_caches[layer]
            dxf, gWf, gUf, gbf = bwd(dseq[:, :H], cf)
            dxb, gWb, gUb, gbb = bwd(dseq[::-1, H:], cb)
            grads[f"rnn{layer}.fwd.W"], grads[f"rnn{layer}.fwd.U"], grads[f"rnn{layer}.fwd.b"] = gWf, gUf, gbf
            grads[f"rnn{layer}.bwd.W"], grads[f"rnn{layer}.bwd.U"], grads[f"rnn{layer}.bwd.b"] = gWb, gUb, gbb
            dseq = dxf + dxb[::-1]
        return grads
