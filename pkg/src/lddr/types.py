"""Shared domain types and numeric conventions.

All scalar math is float64; token counts and pixel dimensions are ints.
Ties anywhere in the pipeline break toward the lower frame index.
Every container validates its invariants at construction and is immutable
afterwards (arrays are marked read-only), so instances are safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Numeric conventions used across modules.
EPS_RANK = 1e-10        # residual gain at or below this means rank exhaustion
EPS_JITTER = 1e-8       # diagonal jitter for log-det / projection solves
REORTH_TOL = 1e-4       # ||v||^2 / d_j drift that triggers a second Gram-Schmidt pass
KERNEL_CAP = 20000      # default max T for explicit T x T kernel materialization

# Token-resolution protocol constants.
PATCH_PX = 14                  # one visual token covers a 14x14 pixel patch
TOKENS_PER_FULL_FRAME = 1024   # full-resolution frame equivalent
W_MIN_DEFAULT = 256
W_MAX_DEFAULT = 1024
TAU_DEFAULT = 1.0
POOL_MULTIPLIER_DEFAULT = 2.0


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EmbeddingSet:
    """T frame embeddings plus one query embedding, as produced by an encoder."""

    frame_embeddings: np.ndarray  # (T, d)
    query_embedding: np.ndarray   # (d,)

    def __post_init__(self):
        frames = _freeze(np.atleast_2d(self.frame_embeddings))
        query = _freeze(np.asarray(self.query_embedding, dtype=np.float64).ravel())
        object.__setattr__(self, "frame_embeddings", frames)
        object.__setattr__(self, "query_embedding", query)
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
            raise ValueError(f"frame matrix must be (T>=1, d>=1), got {frames.shape}")
        if query.shape[0] != frames.shape[1]:
            raise ValueError(
                f"query dim {query.shape[0]} != frame dim {frames.shape[1]}"
            )
        if not np.isfinite(frames).all() or not np.isfinite(query).all():
            raise ValueError("embeddings must be finite")
        norms = np.linalg.norm(frames, axis=1)
        if not (norms > 0).all():
            bad = int(np.argmin(norms))
            raise ValueError(f"frame {bad} has zero norm")
        if np.linalg.norm(query) == 0.0:
            raise ValueError("query embedding has zero norm")

    @property
    def frame_count(self) -> int:
        return self.frame_embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.frame_embeddings.shape[1]


@dataclass(frozen=True)
class ConditionedFeatures:
    """Query-conditioned feature rows: row t is relevance[t] times the unit frame direction.

    The whole selection pipeline operates on these rows; the explicit T x T
    kernel is only ever their Gram matrix.
    """

    phi: np.ndarray           # (T, d)
    relevance: np.ndarray     # (T,) in [0, 1]
    row_norms_sq: np.ndarray  # (T,) cached ||phi_t||^2

    def __post_init__(self):
        phi = _freeze(np.atleast_2d(self.phi))
        rel = _freeze(np.asarray(self.relevance, dtype=np.float64).ravel())
        rns = _freeze(np.asarray(self.row_norms_sq, dtype=np.float64).ravel())
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "relevance", rel)
        object.__setattr__(self, "row_norms_sq", rns)
        T = phi.shape[0]
        if rel.shape[0] != T or rns.shape[0] != T:
            raise ValueError("relevance / row_norms_sq length must equal T")
        if not np.isfinite(phi).all():
            raise ValueError("phi must be finite")
        if rel.min(initial=0.0) < -1e-12 or rel.max(initial=0.0) > 1.0 + 1e-12:
            raise ValueError("relevance values must lie in [0, 1]")
        norms = np.linalg.norm(phi, axis=1)
        if not np.allclose(norms, rel, rtol=1e-9, atol=1e-12):
            raise ValueError("||phi_t|| must equal relevance[t]")
        if not np.allclose(rns, rel * rel, rtol=1e-9, atol=1e-15):
            raise ValueError("row_norms_sq[t] must equal relevance[t]^2")

    @property
    def frame_count(self) -> int:
        return self.phi.shape[0]

    @property
    def dim(self) -> int:
        return self.phi.shape[1]

    def restrict(self, indices) -> "ConditionedFeatures":
        """Row-subset view (used by chunked selection); conditioning is unchanged."""
        idx = np.asarray(indices, dtype=np.intp)
        return ConditionedFeatures(
            phi=self.phi[idx],
            relevance=self.relevance[idx],
            row_norms_sq=self.row_norms_sq[idx],
        )


@dataclass(frozen=True)
class SelectionTrace:
    """Result of one greedy selection run.

    ``basis`` holds the orthonormal feature-space directions built by the
    feature solver. The kernel-space solver tracks T-dim Cholesky vectors
    that are not orthonormal, and chunked runs have no joint basis, so both
    leave it as None.
    """

    selected: tuple[int, ...]
    gains: np.ndarray            # residual gain at each selection step
    basis: np.ndarray | None     # (k, d) orthonormal rows, or None
    exhausted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(int(i) for i in self.selected))
        gains = _freeze(np.asarray(self.gains, dtype=np.float64).ravel())
        object.__setattr__(self, "gains", gains)
        if self.basis is not None:
            object.__setattr__(self, "basis", _freeze(np.atleast_2d(self.basis)))
        k = len(self.selected)
        if len(set(self.selected)) != k:
            raise ValueError("selected indices contain duplicates")
        if gains.shape[0] != k:
            raise ValueError("gains length must match selection length")
        if k and (not np.isfinite(gains).all() or gains.min() <= 0.0):
            raise ValueError("every recorded gain must be positive and finite")
        if self.basis is not None:
            if self.basis.shape[0] != k:
                raise ValueError("basis row count must match selection length")
            gram = self.basis @ self.basis.T
            if k and np.abs(gram - np.eye(k)).max() > 1e-6:
                raise ValueError("basis rows are not orthonormal")

    def __len__(self) -> int:
        return len(self.selected)


@dataclass(frozen=True)
class ImportanceTable:
    """Per-selected-frame importance: leave-one-out score, density prior, combined."""

    frames: tuple[int, ...]
    gd: np.ndarray        # leave-one-out determinant-ratio score, >= 0
    density: np.ndarray   # squared-norm density prior, mean 1 over the set
    combined: np.ndarray  # gd * density**tau
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(int(i) for i in self.frames))
        for name in ("gd", "density", "combined"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name)).ravel()))
        object.__setattr__(self, "tau", float(self.tau))
        k = len(self.frames)
        if len(set(self.frames)) != k:
            raise ValueError("frames contain duplicates")
        if k == 0:
            raise ValueError("importance table cannot be empty")
        for name in ("gd", "density", "combined"):
            v = getattr(self, name)
            if v.shape[0] != k:
                raise ValueError(f"{name} length must match frames")
            if not np.isfinite(v).all() or v.min() < 0.0:
                raise ValueError(f"{name} values must be finite and nonnegative")
        if self.tau < 0.0:
            raise ValueError("tau must be nonnegative")
        if abs(float(self.density.mean()) - 1.0) > 1e-9:
            raise ValueError("density prior must average to 1 over the selected set")

    def __len__(self) -> int:
        return len(self.frames)

    def sorted_by_combined(self) -> "ImportanceTable":
        """Descending combined score; equal scores keep the lower frame index first."""
        order = sorted(range(len(self.frames)),
                       key=lambda i: (-float(self.combined[i]), self.frames[i]))
        idx = np.asarray(order, dtype=np.intp)
        return ImportanceTable(
            frames=tuple(self.frames[i] for i in order),
            gd=self.gd[idx], density=self.density[idx], combined=self.combined[idx],
            tau=self.tau,
        )


@dataclass(frozen=True)
class AllocationPlan:
    """Retained frames with their token grants and target pixel resolutions.

    ``retained`` is in allocation (score-sorted) order; consumers that need
    temporal order sort by frame index, as the plan writer does.
    """

    retained: tuple[int, ...]
    tokens: tuple[int, ...]
    resolutions: tuple[tuple[int, int], ...]  # (height_px, width_px)
    total_tokens: int
    budget: int
    w_min: int
    w_max: int
    exhausted_pool: bool = field(default=False)  # candidate selection hit rank exhaustion

    def __post_init__(self):
        object.__setattr__(self, "retained", tuple(int(i) for i in self.retained))
        object.__setattr__(self, "tokens", tuple(int(w) for w in self.tokens))
        object.__setattr__(
            self, "resolutions", tuple((int(h), int(w)) for h, w in self.resolutions)
        )
        k = len(self.retained)
        if k == 0:
            raise ValueError("plan must retain at least one frame")
        if len(set(self.retained)) != k:
            raise ValueError("retained indices contain duplicates")
        if len(self.tokens) != k or len(self.resolutions) != k:
            raise ValueError("tokens / resolutions must align with retained frames")
        if not (0 < self.w_min <= self.w_max):
            raise ValueError(f"invalid bounds ({self.w_min}, {self.w_max})")
        for w in self.tokens:
            if not (self.w_min <= w <= self.w_max):
                raise ValueError(f"token grant {w} outside [{self.w_min}, {self.w_max}]")
        if self.total_tokens != sum(self.tokens):
            raise ValueError("total_tokens must equal the sum of per-frame grants")
        if self.total_tokens > self.budget:
            raise ValueError(f"total {self.total_tokens} exceeds budget {self.budget}")
        for w, (h_px, w_px) in zip(self.tokens, self.resolutions):
            if h_px <= 0 or w_px <= 0 or h_px % PATCH_PX or w_px % PATCH_PX:
                raise ValueError(f"resolution {(h_px, w_px)} not a positive multiple of {PATCH_PX}")
            patches = -(-h_px // PATCH_PX) * -(-w_px // PATCH_PX)
            if patches > w:
                raise ValueError(f"resolution {(h_px, w_px)} needs {patches} patches > {w} tokens")

    @property
    def k_star(self) -> int:
        return len(self.retained)
