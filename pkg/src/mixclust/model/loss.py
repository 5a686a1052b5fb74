"""Deep-clustering affinity loss evaluated through small Gram matrices.

    loss = |V^T V|^2 / K - 2 |V^T Y|^2 / sqrt(K C) + |Y^T Y|^2 / C
         = | V V^T / sqrt(K) - Y Y^T / sqrt(C) |^2

with squared Frobenius norms, V of shape (L, K) and Y of shape (L, C).
"""
import numpy as np

from ..errors import InvalidInputError


def _check(V, Y):
    V = np.asarray(V, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if V.ndim != 2 or Y.ndim != 2:
        raise InvalidInputError("V and Y must be 2-D")
    if V.shape[0] != Y.shape[0]:
        raise InvalidInputError(f"row mismatch: V has {V.shape[0]}, Y has {Y.shape[0]}")
    return V, Y


def dc_loss(V, Y) -> float:
    V, Y = _check(V, Y)
    K, C = V.shape[1], Y.shape[1]
    vv = V.T @ V
    vy = V.T @ Y
    yy = Y.T @ Y
    return float(np.sum(vv * vv) / K - 2.0 * np.sum(vy * vy) / np.sqrt(K * C)
                 + np.sum(yy * yy) / C)


def dc_loss_grad(V, Y) -> np.ndarray:
    V, Y = _check(V, Y)
    K, C = V.shape[1], Y.shape[1]
    return (4.0 / K) * (V @ (V.T @ V)) - (4.0 / np.sqrt(K * C)) * (Y @ (Y.T @ V))


def dc_loss_and_grad(V, Y):
    """Loss and gradient from shared Gram matrices."""
    V, Y = _check(V, Y)
    K, C = V.shape[1], Y.shape[1]
    vv = V.T @ V
    vy = V.T @ Y
    yy = Y.T @ Y
    c = 1.0 / np.sqrt(K * C)
    loss = float(np.sum(vv * vv) / K - 2.0 * c * np.sum(vy * vy) + np.sum(yy * yy) / C)
    grad = V @ ((4.0 / K) * vv) - Y @ ((4.0 * c) * vy.T)
    return loss, grad


def affinity_distance(V, Y) -> float:
    """Brute-force L x L evaluation of the same quantity (for checking only)."""
    V, Y = _check(V, Y)
    diff = V @ V.T / np.sqrt(V.shape[1]) - Y @ Y.T / np.sqrt(Y.shape[1])
    return float(np.sum(diff * diff))
