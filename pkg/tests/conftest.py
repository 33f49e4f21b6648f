from __future__ import annotations

import numpy as np
import pytest

from connhs.corpus import Corpus, DocumentFeatures
from connhs.graph import RELATIONS, MultiRelationalTextGraph, RelationAdjacency


def random_corpus(rng: np.random.Generator, n: int, dim: int, allow_empty_features: bool = True) -> Corpus:
    """Random corpus with mixed keyword/event list sizes; no zero vectors."""
    docs = []
    for i in range(n):
        lo = 0 if allow_empty_features else 1
        n_kw = int(rng.integers(lo, 4))
        n_ev = int(rng.integers(lo, 3))
        docs.append(
            DocumentFeatures(
                id=f"doc{i}",
                content_vec=rng.standard_normal(dim),
                title_vec=rng.standard_normal(dim),
                keyword_vecs=tuple(rng.standard_normal(dim) for _ in range(n_kw)),
                event_vecs=tuple(rng.standard_normal(dim) for _ in range(n_ev)),
                label=f"c{int(rng.integers(0, 3))}",
                split="train" if rng.random() < 0.8 else "test",
            )
        )
    return Corpus.from_docs(docs)


def random_adjacency(rng: np.random.Generator, n: int, relation: str, p: float = 0.3) -> RelationAdjacency:
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return RelationAdjacency(relation=relation, edges=upper | upper.T)


def random_graph(rng: np.random.Generator, n: int, p: float = 0.3) -> MultiRelationalTextGraph:
    return MultiRelationalTextGraph(
        n=n,
        node_order=tuple(f"doc{i}" for i in range(n)),
        adjacencies={r: random_adjacency(rng, n, r, p) for r in RELATIONS},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
