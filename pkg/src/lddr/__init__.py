"""Budget-aware video frame selection.

Greedy determinant-volume selection over query-conditioned frame features,
leave-one-out importance for the selected set, and clamped token allocation
under a global visual-token budget. Hot selection loops run through a
compiled core when built, with a numpy fallback selected at import.
"""

from .alloc import (
    PipelineResult,
    build_pipeline,
    largest_feasible_prefix,
    prefix_allocation,
    tokens_to_resolution,
)
from .gd import density_aware_score, density_prior, gd_logdet, gd_residual, score_selection
from .io import (
    RunConfig,
    load_embeddings,
    read_embeddings,
    read_embeddings_json,
    write_embeddings,
    write_plan,
)
from .kernel import build_phi, compute_relevance, materialize_kernel, minmax_normalize, normalize_frames
from .select import (
    available_backends,
    choose_backend,
    chunked_select,
    exhaustive_map,
    greedy_feature_space,
    greedy_kernel_space,
)
from .types import (
    AllocationPlan,
    ConditionedFeatures,
    EmbeddingSet,
    ImportanceTable,
    SelectionTrace,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan",
    "ConditionedFeatures",
    "EmbeddingSet",
    "ImportanceTable",
    "PipelineResult",
    "RunConfig",
    "SelectionTrace",
    "available_backends",
    "build_phi",
    "build_pipeline",
    "choose_backend",
    "chunked_select",
    "compute_relevance",
    "density_aware_score",
    "density_prior",
    "exhaustive_map",
    "gd_logdet",
    "gd_residual",
    "greedy_feature_space",
    "greedy_kernel_space",
    "largest_feasible_prefix",
    "load_embeddings",
    "materialize_kernel",
    "minmax_normalize",
    "normalize_frames",
    "prefix_allocation",
    "read_embeddings",
    "read_embeddings_json",
    "score_selection",
    "tokens_to_resolution",
    "write_embeddings",
    "write_plan",
    "__version__",
]
