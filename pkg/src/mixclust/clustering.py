"""Lloyd's K-means with k-means++ seeding and best-of-restarts selection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass
class KmeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations_run: int
    inertia_history: list = field(default_factory=list)


def _sq_dists(points, centroids, sq_norms=None):
    if sq_norms is None:
        sq_norms = np.einsum("ij,ij->i", points, points)
    d2 = sq_norms[:, None] - 2.0 * (points @ centroids.T) + np.einsum("ij,ij->i", centroids, centroids)
    return np.maximum(d2, 0.0)


def _exact_inertia(points, centroids, assign):
    diff = points - centroids[assign]
    return float(np.einsum("ij,ij->", diff, diff))


def _plusplus(points, k, rng):
    n = len(points)
    centroids = [points[rng.integers(n)]]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centroids.append(points[idx])
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return np.array(centroids, dtype=np.float64)


def _lloyd(points, centroids, max_iter, tol, sq_norms):
    n, k = len(points), len(centroids)
    history = []
    assign = None
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(points, centroids, sq_norms)
        # argmin returns the first minimum, so ties go to the lowest index
        new_assign = np.argmin(d2, axis=1)
        mind = d2[np.arange(n), new_assign]
        history.append(float(mind.sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        counts = np.bincount(assign, minlength=k)
        onehot = (assign[:, None] == np.arange(k)).astype(points.dtype)
        sums = onehot.T @ points
        new_c = np.where(counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], centroids)
        for j in np.flatnonzero(counts == 0):
            # farthest point from its own centroid takes over the empty cluster
            far = int(np.argmax(mind))
            new_c[j] = points[far]
            assign[far] = j
            mind[far] = 0.0
        shift = np.max(np.sum((new_c - centroids) ** 2, axis=1))
        centroids = new_c
        if shift <= tol:
            d2 = _sq_dists(points, centroids, sq_norms)
            assign = np.argmin(d2, axis=1)
            history.append(float(d2[np.arange(n), assign].sum()))
            break
    return assign, centroids, _exact_inertia(points, centroids, assign), it, history


def kmeans(points, k: int, restarts: int = 10, max_iter: int = 300, tol: float = 1e-8,
           rng=None) -> KmeansResult:
    """Cluster the rows of ``points`` into ``k`` groups.

    ``tol`` bounds the squared centroid shift relative to the mean per-feature
    variance of the data, so the stopping rule is unit free.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] < 1:
        raise InvalidInputError("points must be an (n, d) matrix")
    n = len(pts)
    if k < 1 or n < k:
        raise InvalidInputError(f"cannot form {k} clusters from {n} points")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("points contain NaN or inf")
    rng = rng if rng is not None else np.random.default_rng(0)
    abs_tol = tol * float(np.mean(np.var(pts, axis=0)))
    sq_norms = np.einsum("ij,ij->i", pts, pts)
    best = None
    for _ in range(max(1, restarts)):
        init = _plusplus(pts, k, rng)
        assign, cents, inertia, iters, hist = _lloyd(pts, init, max_iter, abs_tol, sq_norms)
        if best is None or inertia < best.inertia:
            best = KmeansResult(assign, cents, inertia, iters, hist)
    return best
