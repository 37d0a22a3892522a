"""External formats: embedding ingestion and plan serialization.

Binary embedding files are little-endian throughout: 8-byte magic
"LDDREMB1", uint32 T, uint32 d, then T*d float32 frame values row-major
followed by d float32 query values (total 16 + 4*d*(T+1) bytes). Values
are widened to float64 internally. A JSON twin format exists for
hand-written small instances. Plan output is deterministic JSON: identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    DimensionMismatchError,
    NonFiniteValueError,
    TruncatedFileError,
    ZeroNormRowError,
)
from .types import (
    EPS_JITTER,
    EPS_RANK,
    KERNEL_CAP,
    POOL_MULTIPLIER_DEFAULT,
    TAU_DEFAULT,
    W_MAX_DEFAULT,
    W_MIN_DEFAULT,
    AllocationPlan,
    EmbeddingSet,
    ImportanceTable,
    SelectionTrace,
)

MAGIC = b"LDDREMB1"
_HEADER = struct.Struct("<8sII")


@dataclass(frozen=True)
class RunConfig:
    """Knobs for one pipeline run; defaults follow the evaluation protocol."""

    frame_budget: int
    mode: str = "dynamic"
    w_min: int = W_MIN_DEFAULT
    w_max: int = W_MAX_DEFAULT
    tau: float = TAU_DEFAULT
    pool_multiplier: float = POOL_MULTIPLIER_DEFAULT
    chunks: int = 1
    seed: int = 0
    eps_rank: float = EPS_RANK
    eps_jitter: float = EPS_JITTER
    kernel_cap: int = KERNEL_CAP
    orig_height: int = 448
    orig_width: int = 448

    def __post_init__(self):
        if self.frame_budget < 1:
            raise ValueError("frame_budget must be >= 1")
        if self.mode not in ("fixed", "dynamic"):
            raise ValueError(f"mode must be 'fixed' or 'dynamic', got {self.mode!r}")
        if not (0 < self.w_min <= self.w_max):
            raise ValueError(f"invalid token bounds ({self.w_min}, {self.w_max})")
        if self.tau < 0.0:
            raise ValueError("tau must be nonnegative")
        if self.pool_multiplier < 1.0:
            raise ValueError("pool_multiplier must be >= 1")
        if self.chunks < 1:
            raise ValueError("chunks must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def _validate_payload(frames: np.ndarray, query: np.ndarray,
                      offsets: bool) -> EmbeddingSet:
    T, d = frames.shape
    bad = np.argwhere(~np.isfinite(frames))
    if bad.size:
        r, c = map(int, bad[0])
        off = 16 + 4 * (r * d + c) if offsets else None
        raise NonFiniteValueError(f"frame {r}, component {c}", off)
    bad_q = np.argwhere(~np.isfinite(query))
    if bad_q.size:
        i = int(bad_q[0][0])
        off = 16 + 4 * (T * d + i) if offsets else None
        raise NonFiniteValueError(f"query component {i}", off)
    norms = np.linalg.norm(frames, axis=1)
    if not (norms > 0.0).all():
        raise ZeroNormRowError(f"frame {int(np.argmin(norms))}")
    if np.linalg.norm(query) == 0.0:
        raise ZeroNormRowError("query")
    return EmbeddingSet(frame_embeddings=frames, query_embedding=query)


def read_embeddings(path) -> EmbeddingSet:
    """Load and validate a binary embedding file."""
    data = Path(path).read_bytes()
    if len(data) >= 8 and data[:8] != MAGIC:
        raise BadMagicError(data[:8])
    if len(data) < _HEADER.size:
        raise TruncatedFileError(_HEADER.size, len(data))
    _, T, d = _HEADER.unpack_from(data)
    expected = 16 + 4 * d * (T + 1)
    if len(data) != expected:
        raise TruncatedFileError(expected, len(data))
    if T < 1 or d < 1:
        raise ValueError(f"header declares T={T}, d={d}; both must be >= 1")
    payload = np.frombuffer(data, dtype="<f4", offset=16).astype(np.float64)
    frames = payload[: T * d].reshape(T, d)
    query = payload[T * d:]
    return _validate_payload(frames, query, offsets=True)


def write_embeddings(embeddings: EmbeddingSet, path) -> None:
    """Binary writer; internal float64 values narrow to float32 on disk."""
    T, d = embeddings.frame_count, embeddings.dim
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, T, d))
        fh.write(embeddings.frame_embeddings.astype("<f4").tobytes())
        fh.write(embeddings.query_embedding.astype("<f4").tobytes())


def read_embeddings_json(path) -> EmbeddingSet:
    """Load the JSON twin format: {"frames": [[...], ...], "query": [...]}."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "frames" not in doc or "query" not in doc:
        raise ValueError("embedding JSON must contain 'frames' and 'query'")
    rows = doc["frames"]
    if not isinstance(rows, list) or not rows:
        raise ValueError("'frames' must be a nonempty list of rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DimensionMismatchError(f"ragged frame rows: widths {sorted(widths)}")
    d = widths.pop()
    if d < 1:
        raise ValueError("frame rows must be nonempty")
    if len(doc["query"]) != d:
        raise DimensionMismatchError(
            f"query length {len(doc['query'])} != frame dim {d}"
        )
    frames = np.asarray(rows, dtype=np.float64)
    query = np.asarray(doc["query"], dtype=np.float64)
    return _validate_payload(frames, query, offsets=False)


def load_embeddings(path) -> EmbeddingSet:
    """Dispatch on extension: .json reads the JSON twin, anything else binary."""
    if str(path).endswith(".json"):
        return read_embeddings_json(path)
    return read_embeddings(path)


def _sig9(x: float) -> float:
    # fixed 9-significant-digit float formatting keeps plan output byte-stable
    return float(f"{float(x):.9g}")


def write_plan(plan: AllocationPlan, trace: SelectionTrace,
               scores: ImportanceTable, config: RunConfig, path) -> None:
    """Serialize one run deterministically.

    Selection order keeps greedy order with per-step gains; retained-frame
    records are emitted in temporal order with their allocation and scores.
    """
    lookup = {f: i for i, f in enumerate(scores.frames)}
    missing = [f for f in plan.retained if f not in lookup]
    if missing:
        raise ValueError(f"retained frames {missing} missing from the score table")
    grants = dict(zip(plan.retained, zip(plan.tokens, plan.resolutions)))
    rank = {f: r for r, f in enumerate(plan.retained)}
    records = []
    for frame in sorted(plan.retained):
        tokens, (h_px, w_px) = grants[frame]
        i = lookup[frame]
        records.append({
            "frame_index": frame,
            "rank": rank[frame],
            "gd_score": _sig9(scores.gd[i]),
            "density_aware_score": _sig9(scores.combined[i]),
            "tokens": tokens,
            "height_px": h_px,
            "width_px": w_px,
        })
    doc = {
        "config": {
            "frame_budget": config.frame_budget,
            "mode": config.mode,
            "w_min": config.w_min,
            "w_max": config.w_max,
            "tau": _sig9(config.tau),
            "pool_multiplier": _sig9(config.pool_multiplier),
            "chunks": config.chunks,
        },
        "selection": {
            "order": list(trace.selected),
            "gains": [_sig9(g) for g in trace.gains],
            "exhausted": bool(trace.exhausted),
        },
        "frames": records,
        "totals": {
            "k_star": plan.k_star,
            "total_tokens": plan.total_tokens,
            "budget": plan.budget,
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
