"""Query-conditioned feature construction.

Frames are L2-normalized, scored by cosine similarity against the query,
and the min-max normalized relevance rescales each unit row. Selection then
runs on the resulting rows; their Gram matrix is the similarity kernel
reweighted by relevance on both sides, but the production path never forms
it explicitly.
"""

from __future__ import annotations

import numpy as np

from .errors import KernelCapError
from .types import KERNEL_CAP, ConditionedFeatures, EmbeddingSet


def normalize_frames(embeddings: EmbeddingSet) -> np.ndarray:
    """Unit-norm copy of the frame rows."""
    frames = embeddings.frame_embeddings
    norms = np.linalg.norm(frames, axis=1, keepdims=True)
    return frames / norms


def compute_relevance(normalized_frames: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Cosine similarity of each (already unit-norm) frame row against the query."""
    q = np.asarray(query, dtype=np.float64).ravel()
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise ValueError("query has zero norm")
    return np.asarray(normalized_frames, dtype=np.float64) @ (q / qn)


def minmax_normalize(raw: np.ndarray) -> np.ndarray:
    """Map raw scores linearly onto [0, 1].

    A constant input carries no query signal, so it maps to all ones: the
    kernel then degrades to the pure similarity matrix instead of vanishing.
    """
    raw = np.asarray(raw, dtype=np.float64).ravel()
    if not np.isfinite(raw).all():
        raise ValueError("relevance scores must be finite")
    lo = raw.min()
    hi = raw.max()
    if hi == lo:
        return np.ones_like(raw)
    return (raw - lo) / (hi - lo)


def build_phi(embeddings: EmbeddingSet) -> ConditionedFeatures:
    """Full conditioning pipeline: normalize, cosine relevance, min-max, rescale."""
    fhat = normalize_frames(embeddings)
    rel = minmax_normalize(compute_relevance(fhat, embeddings.query_embedding))
    phi = rel[:, None] * fhat
    return ConditionedFeatures(
        phi=phi,
        relevance=rel,
        row_norms_sq=np.einsum("ij,ij->i", phi, phi),
    )


def materialize_kernel(features: ConditionedFeatures, cap: int = KERNEL_CAP) -> np.ndarray:
    """Explicit T x T Gram kernel of the conditioned rows.

    Exists for the reference solver and tests only; raises when T exceeds
    ``cap`` to push callers onto the feature-space path.
    """
    T = features.frame_count
    if T > cap:
        raise KernelCapError(f"T={T} exceeds kernel materialization cap {cap}")
    return features.phi @ features.phi.T
