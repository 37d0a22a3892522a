"""Greedy MAP selection: production feature-space solver, kernel-space
reference, exhaustive oracle for tiny instances, and chunked selection.

The feature-space solver runs through a compiled core when the extension
built, with a numpy fallback selected at import; both produce identical
traces. The kernel-space solver is kept as an independent implementation —
it is the equivalence oracle, never a dispatch target.
"""

from __future__ import annotations

import os
from itertools import combinations
from math import comb, inf

import numpy as np

from . import _select_py
from .errors import CapExceededError
from .types import EPS_JITTER, EPS_RANK, REORTH_TOL, ConditionedFeatures, SelectionTrace

try:
    from . import _select_core
except ImportError:  # extension not built; numpy path covers everything
    _select_core = None


# rows*dim crossover measured on 2-core hosts: below it the compiled core
# wins (no temporaries, fused update); above it the numpy path rides
# multithreaded BLAS for the projection matvec and pulls ahead
_COMPILED_CUTOFF = 150_000


def available_backends() -> tuple[str, ...]:
    return ("python", "compiled") if _select_core is not None else ("python",)


def choose_backend(rows: int, dim: int, backend: str | None = None) -> str:
    """Resolve which selection loop runs for an instance of this shape.

    An explicit name always wins (erroring if the compiled core is absent),
    then the LDDR_BACKEND environment override, then the size heuristic.
    """
    if backend in ("python", "compiled"):
        name = backend
    elif backend in (None, "auto"):
        env = os.environ.get("LDDR_BACKEND", "").strip().lower()
        if env in ("python", "compiled"):
            name = env
        elif _select_core is not None and rows * dim <= _COMPILED_CUTOFF:
            name = "compiled"
        else:
            name = "python"
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if name == "compiled" and _select_core is None:
        raise ValueError("compiled backend requested but the extension is not built")
    return name


def greedy_feature_space(features: ConditionedFeatures, budget: int, *,
                         eps_rank: float = EPS_RANK,
                         reorth_tol: float = REORTH_TOL,
                         backend: str | None = None) -> SelectionTrace:
    """Greedy MAP selection on the conditioned rows, O(budget * T * d) time.

    Per step: argmax over residual gains (ties to the lower index),
    orthogonalize the winner against the basis, normalize by sqrt(gain),
    subtract squared projections from the remaining gains. Stops early with
    ``exhausted=True`` once the best remaining gain is at or below
    ``eps_rank`` instead of dividing by a vanishing norm.
    """
    T = features.frame_count
    if not 1 <= budget <= T:
        raise ValueError(f"budget must be in [1, {T}], got {budget}")
    name = choose_backend(T, features.dim, backend)
    loop = _select_core.greedy_phi if name == "compiled" else _select_py.greedy_phi
    sel, gains, basis, exhausted = loop(
        features.phi, features.row_norms_sq, budget, eps_rank, reorth_tol
    )
    return SelectionTrace(selected=tuple(sel), gains=gains, basis=basis,
                          exhausted=exhausted)


def greedy_kernel_space(kernel: np.ndarray, budget: int, *,
                        eps_rank: float = EPS_RANK) -> SelectionTrace:
    """Reference greedy MAP on an explicit kernel via T-dim Cholesky vectors.

    Equivalence oracle for the feature-space solver; O(T^2) memory. The
    tracked Cholesky vectors are not orthonormal, so the trace carries no
    basis.
    """
    L = np.asarray(kernel, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"kernel must be square, got {L.shape}")
    T = L.shape[0]
    if np.abs(L - L.T).max(initial=0.0) > 1e-8:
        raise ValueError("kernel is not symmetric")
    if not 1 <= budget <= T:
        raise ValueError(f"budget must be in [1, {T}], got {budget}")

    d_vec = np.array(np.diag(L), dtype=np.float64, copy=True)
    active = np.ones(T, dtype=bool)
    chol = np.empty((budget, T), dtype=np.float64)
    selected: list[int] = []
    gains: list[float] = []
    exhausted = False

    for i in range(budget):
        masked = np.where(active, d_vec, -inf)
        j = int(np.argmax(masked))
        gj = float(masked[j])
        if gj <= eps_rank:
            exhausted = True
            break
        e = L[:, j].copy()
        if i:
            e -= chol[:i, j] @ chol[:i]
        e /= np.sqrt(gj)
        chol[i] = e
        selected.append(j)
        gains.append(gj)
        active[j] = False
        d_vec -= e * e
        np.maximum(d_vec, 0.0, out=d_vec)

    return SelectionTrace(selected=tuple(selected), gains=np.asarray(gains),
                          basis=None, exhausted=exhausted)


def exhaustive_map(kernel: np.ndarray, budget: int, *,
                   cap: int = 1_000_000,
                   jitter: float = EPS_JITTER) -> tuple[tuple[int, ...], float]:
    """Exact argmax of the jittered log-det over all size-``budget`` subsets.

    Sanity oracle for greedy quality on tiny instances; ties break
    lexicographically. Enumerating more than ``cap`` subsets is refused.
    """
    L = np.asarray(kernel, dtype=np.float64)
    T = L.shape[0]
    if not 1 <= budget <= T:
        raise ValueError(f"budget must be in [1, {T}], got {budget}")
    n_subsets = comb(T, budget)
    if n_subsets > cap:
        raise CapExceededError(f"C({T},{budget}) = {n_subsets} exceeds cap {cap}")
    Lj = L + jitter * np.eye(T)
    best_subset: tuple[int, ...] | None = None
    best_logdet = -inf
    for subset in combinations(range(T), budget):  # lexicographic order
        idx = np.asarray(subset, dtype=np.intp)
        sign, logdet = np.linalg.slogdet(Lj[np.ix_(idx, idx)])
        val = logdet if sign > 0 else -inf
        if val > best_logdet:
            best_logdet = val
            best_subset = subset
    assert best_subset is not None
    return best_subset, float(best_logdet)


def chunk_spans(total: int, chunks: int) -> list[tuple[int, int]]:
    """Contiguous near-equal spans; the remainder frames go to the earlier chunks."""
    if chunks < 1 or chunks > total:
        raise ValueError(f"chunks must be in [1, {total}], got {chunks}")
    small, extra = divmod(total, chunks)
    spans = []
    start = 0
    for c in range(chunks):
        size = small + (1 if c < extra else 0)
        spans.append((start, start + size))
        start += size
    return spans


def chunked_select(features: ConditionedFeatures, chunks: int, per_chunk: int, *,
                   eps_rank: float = EPS_RANK,
                   backend: str | None = None) -> SelectionTrace:
    """Greedy selection run independently per temporal chunk.

    Ablation baseline against global selection: the video is split into
    ``chunks`` contiguous spans and ``per_chunk`` frames are selected from
    each, so no joint basis exists for the concatenated trace. Results keep
    per-chunk greedy order, chunks in temporal order.
    """
    T = features.frame_count
    if per_chunk < 1:
        raise ValueError(f"per_chunk must be >= 1, got {per_chunk}")
    spans = chunk_spans(T, chunks)
    smallest = min(end - start for start, end in spans)
    if smallest < per_chunk:
        raise ValueError(
            f"invalid partition: smallest chunk has {smallest} frames < per_chunk {per_chunk}"
        )
    selected: list[int] = []
    gains: list[np.ndarray] = []
    exhausted = False
    for start, end in spans:
        sub = features.restrict(range(start, end))
        trace = greedy_feature_space(sub, per_chunk, eps_rank=eps_rank, backend=backend)
        selected.extend(start + i for i in trace.selected)
        gains.append(trace.gains)
        exhausted = exhausted or trace.exhausted
    return SelectionTrace(selected=tuple(selected),
                          gains=np.concatenate(gains) if gains else np.empty(0),
                          basis=None, exhausted=exhausted)
