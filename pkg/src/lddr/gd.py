"""Leave-one-out importance over a selected set.

Two equivalent routes compute each frame's marginal determinant
contribution: a jittered log-det difference on the selected-set Gram, and
the squared residual of the frame against the span of the others, obtained
from the same-jitter regularized normal equations. A squared-norm density
prior (exponent tau) modulates the score before token allocation.
"""

from __future__ import annotations

import numpy as np

from .types import EPS_JITTER, ConditionedFeatures, ImportanceTable


def _check_selected(selected) -> list[int]:
    sel = [int(i) for i in selected]
    if not sel:
        raise ValueError("selected set is empty")
    if len(set(sel)) != len(sel):
        raise ValueError("selected set contains duplicate indices")
    return sel


def _logdet_jittered(gram: np.ndarray, jitter: float) -> float:
    # det of the empty Gram is 1 by convention
    k = gram.shape[0]
    if k == 0:
        return 0.0
    chol = np.linalg.cholesky(gram + jitter * np.eye(k))
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def gd_logdet(features: ConditionedFeatures, selected, *,
              jitter: float = EPS_JITTER) -> np.ndarray:
    """Determinant-ratio form: exp(logdet(G_S) - logdet(G_{S minus t})), jittered."""
    sel = _check_selected(selected)
    rows = features.phi[np.asarray(sel, dtype=np.intp)]
    gram = rows @ rows.T
    full = _logdet_jittered(gram, jitter)
    scores = np.empty(len(sel), dtype=np.float64)
    for pos in range(len(sel)):
        keep = [p for p in range(len(sel)) if p != pos]
        sub = gram[np.ix_(keep, keep)]
        scores[pos] = np.exp(full - _logdet_jittered(sub, jitter))
    return scores


def residual_sq(features: ConditionedFeatures, subset, target: int, *,
                jitter: float = EPS_JITTER) -> float:
    """Squared residual of row ``target`` against the span of ``subset`` rows.

    Solves the jitter-regularized normal equations and evaluates the
    residual through the least-squares identity phi.phi - b.beta, which is
    nonnegative and monotone under subset nesting.
    """
    phi_t = features.phi[int(target)]
    idx = np.asarray([int(i) for i in subset], dtype=np.intp)
    if idx.size == 0:
        return float(features.row_norms_sq[int(target)])
    rows = features.phi[idx]
    gram = rows @ rows.T
    b = rows @ phi_t
    beta = np.linalg.solve(gram + jitter * np.eye(idx.size), b)
    return max(float(phi_t @ phi_t - b @ beta), 0.0)


def gd_residual(features: ConditionedFeatures, selected, *,
                jitter: float = EPS_JITTER) -> np.ndarray:
    """Residual-projection form of the leave-one-out score."""
    sel = _check_selected(selected)
    scores = np.empty(len(sel), dtype=np.float64)
    for pos, t in enumerate(sel):
        rest = [s for s in sel if s != t]
        scores[pos] = residual_sq(features, rest, t, jitter=jitter)
    return scores


def density_prior(features: ConditionedFeatures, selected) -> np.ndarray:
    """Squared row norm relative to the selected-set mean; averages to 1."""
    sel = _check_selected(selected)
    norms_sq = features.row_norms_sq[np.asarray(sel, dtype=np.intp)]
    mean = float(norms_sq.mean())
    if mean <= 0.0:
        raise ValueError("all selected frames have zero relevance")
    return norms_sq / mean


def density_aware_score(frames, gd: np.ndarray, rho: np.ndarray,
                        tau: float = 1.0) -> ImportanceTable:
    """Combine the leave-one-out score with the density prior: gd * rho**tau.

    tau=0 disables the prior (0**0 counts as 1); rho=1 leaves gd unchanged.
    """
    frames = tuple(int(i) for i in frames)
    gd = np.asarray(gd, dtype=np.float64).ravel()
    rho = np.asarray(rho, dtype=np.float64).ravel()
    if not (len(frames) == gd.shape[0] == rho.shape[0]):
        raise ValueError("frames, gd, and rho must have the same length")
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    with np.errstate(invalid="ignore"):
        weight = np.power(rho, tau)
    weight = np.where((rho == 0.0) & (tau == 0.0), 1.0, weight)
    return ImportanceTable(frames=frames, gd=gd, density=rho,
                           combined=gd * weight, tau=tau)


def score_selection(features: ConditionedFeatures, selected, tau: float = 1.0, *,
                    jitter: float = EPS_JITTER) -> ImportanceTable:
    """Full scoring pass for a selected set: gd_logdet + density prior + combine."""
    sel = _check_selected(selected)
    return density_aware_score(
        sel,
        gd_logdet(features, sel, jitter=jitter),
        density_prior(features, sel),
        tau=tau,
    )
