"""Budget-aware retention and token allocation.

Candidates sorted by combined importance are cut to the largest prefix
whose clamped token allocation fits the total budget; each grant then maps
to a 14px-patch-aligned target resolution. Feasibility is not monotone in
the prefix size once clamping kicks in, so the maximal k is found by an
exact descending scan rather than binary search.
"""

from __future__ import annotations

from math import floor, sqrt
from typing import NamedTuple

import numpy as np

from .errors import BudgetTooSmallError
from .gd import score_selection
from .kernel import build_phi
from .select import chunked_select, greedy_feature_space
from .types import (
    PATCH_PX,
    TOKENS_PER_FULL_FRAME,
    AllocationPlan,
    ConditionedFeatures,
    EmbeddingSet,
    ImportanceTable,
    SelectionTrace,
)


def _check_bounds(w_min: int, w_max: int) -> None:
    if w_min <= 0 or w_min > w_max:
        raise ValueError(f"invalid token bounds ({w_min}, {w_max})")


def prefix_allocation(scores: ImportanceTable, C_total: int, w_min: int,
                      w_max: int, prefix_k: int) -> tuple[np.ndarray, bool]:
    """Clamped token grants for the top-``prefix_k`` candidates.

    ``scores`` must already be sorted by combined score descending. Shares
    are proportional to the combined score within the prefix (uniform when
    the prefix sum is zero); grants clamp to [w_min, w_max], floor to ints,
    and the prefix is feasible iff they sum within C_total.
    """
    _check_bounds(w_min, w_max)
    n = len(scores)
    if not 1 <= prefix_k <= n:
        raise ValueError(f"prefix_k must be in [1, {n}], got {prefix_k}")
    combined = scores.combined
    if np.any(np.diff(combined) > 0):
        raise ValueError("scores must be sorted by combined score descending")
    s = combined[:prefix_k]
    total = float(s.sum())
    alpha = s / total if total > 0.0 else np.full(prefix_k, 1.0 / prefix_k)
    clamped = np.clip(C_total * alpha, w_min, w_max)
    tokens = np.floor(clamped).astype(np.int64)
    np.maximum(tokens, w_min, out=tokens)
    return tokens, bool(tokens.sum() <= C_total)


def largest_feasible_prefix(scores: ImportanceTable, C_total: int, w_min: int,
                            w_max: int, *,
                            orig_size: tuple[int, int] = (448, 448),
                            exhausted_pool: bool = False) -> AllocationPlan:
    """Retain the largest score-sorted prefix whose allocation fits the budget.

    Scans k from the full candidate count downward and returns the first
    feasible prefix, which is exactly max{k : sum of grants <= C_total}.
    """
    _check_bounds(w_min, w_max)
    if C_total < 1:
        raise ValueError(f"C_total must be positive, got {C_total}")
    ordered = scores.sorted_by_combined()
    for k in range(len(ordered), 0, -1):
        tokens, feasible = prefix_allocation(ordered, C_total, w_min, w_max, k)
        if feasible:
            retained = ordered.frames[:k]
            resolutions = tuple(
                tokens_to_resolution(int(w), orig_size[0], orig_size[1]) for w in tokens
            )
            return AllocationPlan(
                retained=retained,
                tokens=tuple(int(w) for w in tokens),
                resolutions=resolutions,
                total_tokens=int(tokens.sum()),
                budget=int(C_total),
                w_min=int(w_min),
                w_max=int(w_max),
                exhausted_pool=exhausted_pool,
            )
    raise BudgetTooSmallError(
        f"budget {C_total} cannot cover one frame at w_min={w_min}"
    )


def tokens_to_resolution(w_t: int, orig_h: int, orig_w: int) -> tuple[int, int]:
    """Patch-grid resolution with at most ``w_t`` tokens, aspect ratio preserved.

    Grid: h_p = round(sqrt(w_t * orig_h / orig_w)) (half-up, floor 1),
    w_p = floor(w_t / h_p) (floor 1), shrinking h_p while the grid overshoots.
    """
    if w_t < 1:
        raise ValueError(f"token count must be >= 1, got {w_t}")
    if orig_h < 1 or orig_w < 1:
        raise ValueError("original dimensions must be positive")
    h_p = max(1, int(floor(sqrt(w_t * orig_h / orig_w) + 0.5)))
    w_p = max(1, w_t // h_p)
    while h_p * w_p > w_t and h_p > 1:
        h_p -= 1
    return h_p * PATCH_PX, w_p * PATCH_PX


class PipelineResult(NamedTuple):
    plan: AllocationPlan
    trace: SelectionTrace
    scores: ImportanceTable
    features: ConditionedFeatures


def build_pipeline(embeddings: EmbeddingSet, frame_budget: int, mode: str,
                   config=None) -> PipelineResult:
    """End-to-end run: condition, select, score, allocate.

    fixed mode: select exactly ``frame_budget`` frames, grant each a full
    1024-token frame. dynamic mode: pool min(round(pool_multiplier * F), T)
    candidates, score them, and retain the largest feasible prefix under
    C_total = F * 1024. ``config`` supplies the knobs (bounds, tau, chunks,
    epsilons); ``frame_budget`` and ``mode`` arguments take precedence over
    its copies.
    """
    from .io import RunConfig  # config type lives with the external formats

    cfg = config if config is not None else RunConfig(frame_budget=frame_budget, mode=mode)
    if frame_budget < 1:
        raise ValueError(f"frame budget must be >= 1, got {frame_budget}")
    if mode not in ("fixed", "dynamic"):
        raise ValueError(f"mode must be 'fixed' or 'dynamic', got {mode!r}")

    features = build_phi(embeddings)
    T = features.frame_count
    C_total = frame_budget * TOKENS_PER_FULL_FRAME

    if mode == "fixed":
        if frame_budget > T:
            raise ValueError(f"fixed mode needs F <= T, got F={frame_budget}, T={T}")
        pool = frame_budget
    else:
        pool = min(max(1, int(round(cfg.pool_multiplier * frame_budget))), T)

    if cfg.chunks > 1:
        if pool % cfg.chunks:
            raise ValueError(
                f"candidate pool {pool} not divisible by {cfg.chunks} chunks"
            )
        trace = chunked_select(features, cfg.chunks, pool // cfg.chunks,
                               eps_rank=cfg.eps_rank)
    else:
        trace = greedy_feature_space(features, pool, eps_rank=cfg.eps_rank)

    scores = score_selection(features, trace.selected, tau=cfg.tau,
                             jitter=cfg.eps_jitter)
    orig_size = (cfg.orig_height, cfg.orig_width)

    if mode == "fixed":
        w_full = TOKENS_PER_FULL_FRAME
        resolutions = tuple(
            tokens_to_resolution(w_full, *orig_size) for _ in trace.selected
        )
        plan = AllocationPlan(
            retained=trace.selected,
            tokens=(w_full,) * len(trace.selected),
            resolutions=resolutions,
            total_tokens=w_full * len(trace.selected),
            budget=C_total,
            w_min=min(cfg.w_min, w_full),
            w_max=max(cfg.w_max, w_full),
            exhausted_pool=trace.exhausted,
        )
    else:
        plan = largest_feasible_prefix(scores, C_total, cfg.w_min, cfg.w_max,
                                       orig_size=orig_size,
                                       exhausted_pool=trace.exhausted)
    return PipelineResult(plan=plan, trace=trace, scores=scores, features=features)
