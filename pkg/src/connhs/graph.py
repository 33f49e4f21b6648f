"""Multi-relational text graph construction from embedding similarity.

Three boolean relations over the same document nodes: title (pairwise
cosine above a threshold), keyword and event (count of cross-matching
feature pairs above a minimum association coefficient). All comparisons
are strict, so boundary values never create an edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus

RELATIONS = ("title", "keyword", "event")


@dataclass(frozen=True)
class ThresholdConfig:
    """Similarity thresholds and minimum association coefficients."""

    rho_t: float = 0.7
    rho_e: float = 0.6
    rho_k: float = 0.6
    gamma_e: int = 1
    gamma_k: int = 3

    def __post_init__(self):
        for name in ("rho_t", "rho_e", "rho_k"):
            val = getattr(self, name)
            if not -1.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [-1, 1], got {val}")
        for name in ("gamma_e", "gamma_k"):
            val = getattr(self, name)
            if val < 0:
                raise ValueError(f"{name} must be nonnegative, got {val}")


@dataclass(frozen=True)
class RelationAdjacency:
    """Symmetric, irreflexive boolean adjacency for one relation."""

    relation: str
    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=bool)
        if edges.ndim != 2 or edges.shape[0] != edges.shape[1]:
            raise ValueError("edges must be a square boolean matrix")
        if np.any(np.diag(edges)):
            raise ValueError("adjacency must be irreflexive")
        if not np.array_equal(edges, edges.T):
            raise ValueError("adjacency must be symmetric")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def n(self) -> int:
        return int(self.edges.shape[0])

    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.edges, k=1)))

    def neighbor_sets(self) -> list[set[int]]:
        return [set(np.flatnonzero(self.edges[i]).tolist()) for i in range(self.n)]


@dataclass(frozen=True)
class MultiRelationalTextGraph:
    """Node set plus one adjacency per relation, sharing node order."""

    n: int
    node_order: tuple[str, ...]
    adjacencies: dict[str, RelationAdjacency]

    def __post_init__(self):
        if len(self.node_order) != self.n:
            raise ValueError("node_order length must equal n")
        if len(set(self.node_order)) != self.n:
            raise ValueError("node_order has duplicate ids")
        if set(self.adjacencies) != set(RELATIONS):
            raise ValueError(f"adjacencies must cover exactly {RELATIONS}")
        for adj in self.adjacencies.values():
            if adj.n != self.n:
                raise ValueError("all adjacencies must share the node count")

    def union_edges(self) -> np.ndarray:
        """Boolean matrix marking pairs adjacent in any relation."""
        out = np.zeros((self.n, self.n), dtype=bool)
        for adj in self.adjacencies.values():
            out |= adj.edges
        return out


def cosine_similarity(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine of the angle between two nonzero vectors, in [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.dot(x, y) / (nx * ny))


def _pairwise_cosine(matrix: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ValueError(f"{what}: row {bad} is a zero vector")
    normed = matrix / norms[:, None]
    return normed @ normed.T


def _symmetrize_strict(values: np.ndarray, threshold: float) -> np.ndarray:
    """Boolean edges from the upper triangle of a strict comparison."""
    upper = np.triu(values > threshold, k=1)
    return upper | upper.T


def build_title_relation(corpus: Corpus, rho_t: float) -> RelationAdjacency:
    """Edge iff cosine similarity of title vectors strictly exceeds rho_t."""
    titles = np.stack([d.title_vec for d in corpus.docs])
    sims = _pairwise_cosine(titles, "title vectors")
    return RelationAdjacency(relation="title", edges=_symmetrize_strict(sims, rho_t))


def count_matching_pairs(set_a, set_b, rho: float) -> int:
    """Number of (a, b) pairs over the Cartesian product with cosine > rho."""
    if len(set_a) == 0 or len(set_b) == 0:
        return 0
    a = np.stack([np.asarray(v, dtype=np.float64) for v in set_a])
    b = np.stack([np.asarray(v, dtype=np.float64) for v in set_b])
    if a.shape[1] != b.shape[1]:
        raise ValueError("feature vectors must share one dimension")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise ValueError("cosine similarity is undefined for a zero vector")
    sims = (a / na[:, None]) @ (b / nb[:, None]).T
    return int(np.count_nonzero(sims > rho))


def _association_counts(doc_sets: list[tuple[np.ndarray, ...]], rho: float, what: str) -> np.ndarray:
    """Matrix of matching-pair counts between every pair of documents."""
    n = len(doc_sets)
    counts = np.zeros((n, n), dtype=np.int64)
    nonempty = [i for i, s in enumerate(doc_sets) if len(s) > 0]
    if not nonempty:
        return counts
    stacked = np.concatenate([np.stack(doc_sets[i]) for i in nonempty])
    norms = np.linalg.norm(stacked, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(f"{what}: zero vector among feature vectors")
    normed = stacked / norms[:, None]
    matches = (normed @ normed.T) > rho
    lengths = [len(doc_sets[i]) for i in nonempty]
    starts = np.cumsum([0] + lengths[:-1])
    block = np.add.reduceat(np.add.reduceat(matches.astype(np.int64), starts, axis=0), starts, axis=1)
    idx = np.asarray(nonempty)
    counts[np.ix_(idx, idx)] = block
    return counts


def build_association_relation(
    corpus: Corpus, feature: str, rho: float, gamma: int
) -> RelationAdjacency:
    """Edge iff the matching-pair count strictly exceeds gamma."""
    if feature not in ("event", "keyword"):
        raise ValueError("feature must be 'event' or 'keyword'")
    attr = "event_vecs" if feature == "event" else "keyword_vecs"
    doc_sets = [getattr(d, attr) for d in corpus.docs]
    counts = _association_counts(doc_sets, rho, f"{feature} vectors")
    return RelationAdjacency(relation=feature, edges=_symmetrize_strict(counts, gamma))


def build_graph(corpus: Corpus, cfg: ThresholdConfig) -> MultiRelationalTextGraph:
    """Compose the three relation builders over a corpus."""
    adjacencies = {
        "title": build_title_relation(corpus, cfg.rho_t),
        "keyword": build_association_relation(corpus, "keyword", cfg.rho_k, cfg.gamma_k),
        "event": build_association_relation(corpus, "event", cfg.rho_e, cfg.gamma_e),
    }
    return MultiRelationalTextGraph(n=len(corpus), node_order=corpus.ids, adjacencies=adjacencies)


def separate(graph: MultiRelationalTextGraph) -> list[RelationAdjacency]:
    """Single-relation views of the multi-relational graph, in fixed order."""
    return [graph.adjacencies[r] for r in RELATIONS]


def export_graph(graph: MultiRelationalTextGraph) -> dict:
    """JSON-ready export with i<j edge lists sorted lexicographically."""
    relations = {}
    for r in RELATIONS:
        edges = graph.adjacencies[r].edges
        ii, jj = np.nonzero(np.triu(edges, k=1))
        relations[r] = sorted([int(i), int(j)] for i, j in zip(ii, jj))
    return {"n": graph.n, "node_order": list(graph.node_order), "relations": relations}


def save_graph_json(graph: MultiRelationalTextGraph, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(export_graph(graph), ensure_ascii=False, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
