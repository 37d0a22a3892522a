import numpy as np
import pytest

from lddr.types import ConditionedFeatures, EmbeddingSet


def features_from_phi(rows) -> ConditionedFeatures:
    """Wrap explicit conditioned rows (norms must lie in [0, 1])."""
    phi = np.asarray(rows, dtype=np.float64)
    rel = np.linalg.norm(phi, axis=1)
    return ConditionedFeatures(phi=phi, relevance=rel, row_norms_sq=rel * rel)


def random_embeddings(rng: np.random.Generator, T: int, d: int) -> EmbeddingSet:
    return EmbeddingSet(frame_embeddings=rng.standard_normal((T, d)),
                        query_embedding=rng.standard_normal(d))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
