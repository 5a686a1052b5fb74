"""Scale-invariant SDR and permutation alignment."""
from __future__ import annotations

from itertools import permutations

import numpy as np

from .errors import InvalidInputError

SDR_CAP_DB = 100.0


def sdr(estimate, reference) -> float:
    """SDR after projecting the estimate onto the reference, clipped to +/-100 dB."""
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape:
        raise InvalidInputError(f"length mismatch: {est.shape} vs {ref.shape}")
    ref_energy = np.dot(ref, ref)
    if ref_energy == 0:
        raise InvalidInputError("reference is all zeros")
    target = (np.dot(est, ref) / ref_energy) * ref
    num = np.dot(target, target)
    den = np.dot(est - target, est - target)
    if num == 0:
        return -SDR_CAP_DB
    if den == 0:
        return SDR_CAP_DB
    return float(np.clip(10.0 * np.log10(num / den), -SDR_CAP_DB, SDR_CAP_DB))


def resolve_permutation(estimates, references):
    """Best assignment of estimates to references by mean SDR.

    Returns ``(perm, sdrs)`` where ``estimates[perm[i]]`` is matched to
    ``references[i]`` and ``sdrs[i]`` is that pair's SDR.
    """
    n = len(references)
    if len(estimates) != n:
        raise InvalidInputError(f"{len(estimates)} estimates for {n} references")
    if n > 4:
        raise InvalidInputError("exhaustive permutation search limited to 4 sources")
    table = np.array([[sdr(e, r) for e in estimates] for r in references])
    best_perm, best_score = None, -np.inf
    for perm in permutations(range(n)):
        score = table[np.arange(n), perm].mean()
        if score > best_score:
            best_perm, best_score = perm, score
    return list(best_perm), table[np.arange(n), best_perm]
