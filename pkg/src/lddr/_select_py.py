"""Numpy implementation of the greedy feature-space selection loop.

Fallback used when the compiled core (lddr._select_core) is unavailable.
Both backends run the identical recursion: pick the largest residual gain,
Gram-Schmidt the winner against the accumulated basis, subtract squared
projections from every remaining gain.
"""

from __future__ import annotations

import numpy as np


def greedy_phi(phi: np.ndarray, gains0: np.ndarray, budget: int,
               eps_rank: float, reorth_tol: float):
    """Run the selection loop on raw rows.

    Returns (selected int64 array, gains array, basis (k, d), exhausted flag).
    Stops early when the best remaining gain is at or below ``eps_rank``, or
    when a drift-corrected residual vanishes outright.
    """
    T, d = phi.shape
    d_vec = np.array(gains0, dtype=np.float64, copy=True)
    active = np.ones(T, dtype=bool)
    basis = np.empty((budget, d), dtype=np.float64)
    selected: list[int] = []
    gains: list[float] = []
    exhausted = False

    for i in range(budget):
        masked = np.where(active, d_vec, -np.inf)
        j = int(np.argmax(masked))  # ties resolve to the lowest index
        gj = float(masked[j])
        if gj <= eps_rank:
            exhausted = True
            break
        v = phi[j].copy()
        if i:
            v -= (basis[:i] @ v) @ basis[:i]
            nv2 = float(v @ v)
            if abs(nv2 / gj - 1.0) > reorth_tol:
                # rounding drift: one corrective Gram-Schmidt pass, then
                # normalize by the recomputed norm to keep the basis orthonormal
                v -= (basis[:i] @ v) @ basis[:i]
                nv2 = float(v @ v)
                if nv2 <= 0.0:
                    exhausted = True
                    break
                c = v / np.sqrt(nv2)
            else:
                c = v / np.sqrt(gj)
        else:
            c = v / np.sqrt(gj)
        basis[i] = c
        selected.append(j)
        gains.append(gj)
        active[j] = False
        proj = phi @ c
        d_vec -= proj * proj
        np.maximum(d_vec, 0.0, out=d_vec)  # squared residuals cannot go negative

    k = len(selected)
    return (np.asarray(selected, dtype=np.int64),
            np.asarray(gains, dtype=np.float64),
            basis[:k].copy(),
            exhausted)
