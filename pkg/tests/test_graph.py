from __future__ import annotations

import numpy as np
import pytest

from connhs.corpus import Corpus, DocumentFeatures, SyntheticSpec, generate_synthetic
from connhs.graph import (
    RELATIONS,
    MultiRelationalTextGraph,
    RelationAdjacency,
    ThresholdConfig,
    build_association_relation,
    build_graph,
    build_title_relation,
    cosine_similarity,
    count_matching_pairs,
    export_graph,
    separate,
)

from conftest import random_corpus
from reference import edge_set, ref_association_edges, ref_build_graph, ref_cosine, ref_count_matching, ref_title_edges


class TestCosine:
    def test_identical_direction(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0)

    def test_hand_value(self):
        got = cosine_similarity(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert got == pytest.approx(0.70710678, abs=1e-8)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            cosine_similarity(np.zeros(3), np.ones(3))

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            cosine_similarity(np.ones(3), np.ones(4))

    def test_self_similarity_and_scaling(self, rng):
        for _ in range(50):
            x = rng.standard_normal(6)
            y = rng.standard_normal(6)
            a = float(rng.uniform(0.1, 10.0))
            assert abs(cosine_similarity(x, x) - 1.0) <= 1e-12
            assert abs(cosine_similarity(a * x, y) - cosine_similarity(x, y)) <= 1e-12

    def test_range(self, rng):
        for _ in range(100):
            x, y = rng.standard_normal(4), rng.standard_normal(4)
            assert -1.0 - 1e-12 <= cosine_similarity(x, y) <= 1.0 + 1e-12
            assert cosine_similarity(x, y) == pytest.approx(cosine_similarity(y, x), abs=1e-15)


class TestTitleRelation:
    def _corpus_from_titles(self, titles):
        docs = [
            DocumentFeatures(
                id=f"t{i}",
                content_vec=np.ones(len(titles[0])),
                title_vec=np.asarray(t, dtype=float),
                keyword_vecs=(),
                event_vecs=(),
                label=None,
                split="train",
            )
            for i, t in enumerate(titles)
        ]
        return Corpus.from_docs(docs)

    def test_identical_titles_edge(self):
        corpus = self._corpus_from_titles([[1.0, 2.0], [1.0, 2.0]])
        adj = build_title_relation(corpus, 0.7)
        assert adj.edges[0, 1]

    def test_boundary_no_edge(self):
        # rho exactly equal to the similarity: strict comparison keeps it out
        corpus = self._corpus_from_titles([[1.0, 0.0], [1.0, 1.0]])
        sim = ref_cosine([1.0, 0.0], [1.0, 1.0])
        adj = build_title_relation(corpus, sim)
        assert not adj.edges[0, 1]

    def test_against_bruteforce(self, rng):
        corpus = random_corpus(rng, 5, 6)
        adj = build_title_relation(corpus, 0.7)
        expected = ref_title_edges([d.title_vec for d in corpus.docs], 0.7)
        assert edge_set(adj.edges) == expected


class TestCountMatchingPairs:
    def test_empty_sets(self):
        assert count_matching_pairs([], [np.ones(3)], 0.5) == 0
        assert count_matching_pairs([np.ones(3)], [], 0.5) == 0

    def test_single_identical(self):
        v = np.array([1.0, 2.0, 3.0])
        assert count_matching_pairs([v], [v], 0.5) == 1

    def test_exhaustive_enumeration(self, rng):
        set_a = [rng.standard_normal(4) for _ in range(3)]
        set_b = [rng.standard_normal(4) for _ in range(4)]
        got = count_matching_pairs(set_a, set_b, 0.6)
        assert got == ref_count_matching(set_a, set_b, 0.6)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            count_matching_pairs([np.zeros(3)], [np.ones(3)], 0.5)


class TestAssociationRelation:
    def test_boundary_count_no_edge(self, rng):
        # two docs sharing exactly gamma matching pairs: strict, so no edge
        v = rng.standard_normal(4)
        docs = [
            DocumentFeatures(
                id=f"a{i}",
                content_vec=np.ones(4),
                title_vec=np.ones(4),
                keyword_vecs=(v, -v),
                event_vecs=(),
                label=None,
                split="train",
            )
            for i in range(2)
        ]
        corpus = Corpus.from_docs(docs)
        count = count_matching_pairs(docs[0].keyword_vecs, docs[1].keyword_vecs, 0.5)
        adj = build_association_relation(corpus, "keyword", 0.5, count)
        assert not adj.edges[0, 1]
        adj2 = build_association_relation(corpus, "keyword", 0.5, count - 1)
        assert adj2.edges[0, 1]

    def test_empty_feature_lists_no_edge(self):
        docs = [
            DocumentFeatures(
                id=f"e{i}",
                content_vec=np.ones(3),
                title_vec=np.ones(3),
                keyword_vecs=(),
                event_vecs=(),
                label=None,
                split="train",
            )
            for i in range(2)
        ]
        corpus = Corpus.from_docs(docs)
        adj = build_association_relation(corpus, "event", 0.5, 0)
        assert adj.edge_count() == 0

    def test_against_bruteforce(self, rng):
        corpus = random_corpus(rng, 6, 5)
        for feature, attr in (("keyword", "keyword_vecs"), ("event", "event_vecs")):
            adj = build_association_relation(corpus, feature, 0.6, 2)
            expected = ref_association_edges([getattr(d, attr) for d in corpus.docs], 0.6, 2)
            assert edge_set(adj.edges) == expected

    def test_bad_feature_name(self, rng):
        with pytest.raises(ValueError, match="feature"):
            build_association_relation(random_corpus(rng, 2, 3), "title", 0.5, 1)


class TestBuildGraph:
    def test_single_doc(self, rng):
        corpus = random_corpus(rng, 1, 4)
        graph = build_graph(corpus, ThresholdConfig())
        assert graph.n == 1
        assert all(graph.adjacencies[r].edge_count() == 0 for r in RELATIONS)

    def test_against_bruteforce_oracle(self, rng):
        cfg = ThresholdConfig(rho_t=0.7, rho_e=0.6, rho_k=0.6, gamma_e=3, gamma_k=6)
        corpus = random_corpus(rng, 20, 6)
        graph = build_graph(corpus, cfg)
        expected = ref_build_graph(corpus, cfg.rho_t, cfg.rho_k, cfg.rho_e, cfg.gamma_k, cfg.gamma_e)
        for r in RELATIONS:
            assert edge_set(graph.adjacencies[r].edges) == expected[r]

    def test_zero_noise_title_cliques(self):
        spec = SyntheticSpec(n_clusters=3, docs_per_cluster=5, dim=8, intra_noise=0.0, cross_confuser_rate=0.0, seed=9)
        corpus = generate_synthetic(spec)
        graph = build_graph(corpus, ThresholdConfig(rho_t=0.7))
        labels = [d.label for d in corpus.docs]
        edges = graph.adjacencies["title"].edges
        for i in range(len(corpus)):
            for j in range(len(corpus)):
                if i == j:
                    continue
                assert edges[i, j] == (labels[i] == labels[j])

    def test_node_order_follows_corpus(self, rng):
        corpus = random_corpus(rng, 7, 4)
        graph = build_graph(corpus, ThresholdConfig())
        assert graph.node_order == corpus.ids

    def test_symmetry_and_irreflexivity(self, rng):
        corpus = random_corpus(rng, 12, 5)
        graph = build_graph(corpus, ThresholdConfig(rho_t=0.2, rho_e=0.2, rho_k=0.2, gamma_e=0, gamma_k=0))
        for r in RELATIONS:
            e = graph.adjacencies[r].edges
            assert np.array_equal(e, e.T)
            assert not np.any(np.diag(e))

    def test_monotonicity_in_thresholds(self, rng):
        corpus = random_corpus(rng, 10, 5)
        base = ThresholdConfig(rho_t=0.2, rho_e=0.2, rho_k=0.2, gamma_e=0, gamma_k=0)
        g0 = build_graph(corpus, base)
        for name, tighter in (
            ("rho_t", ThresholdConfig(rho_t=0.5, rho_e=0.2, rho_k=0.2, gamma_e=0, gamma_k=0)),
            ("rho_e", ThresholdConfig(rho_t=0.2, rho_e=0.5, rho_k=0.2, gamma_e=0, gamma_k=0)),
            ("rho_k", ThresholdConfig(rho_t=0.2, rho_e=0.2, rho_k=0.5, gamma_e=0, gamma_k=0)),
            ("gamma_e", ThresholdConfig(rho_t=0.2, rho_e=0.2, rho_k=0.2, gamma_e=2, gamma_k=0)),
            ("gamma_k", ThresholdConfig(rho_t=0.2, rho_e=0.2, rho_k=0.2, gamma_e=0, gamma_k=2)),
        ):
            g1 = build_graph(corpus, tighter)
            for r in RELATIONS:
                before = edge_set(g0.adjacencies[r].edges)
                after = edge_set(g1.adjacencies[r].edges)
                assert after <= before, f"raising {name} added edges to {r}"


class TestSeparate:
    def test_views_match_inputs(self, rng):
        from conftest import random_graph

        graph = random_graph(rng, 15)
        views = separate(graph)
        assert [v.relation for v in views] == list(RELATIONS)
        for view in views:
            assert np.array_equal(view.edges, graph.adjacencies[view.relation].edges)

    def test_union_preserved(self, rng):
        from conftest import random_graph

        graph = random_graph(rng, 8)
        views = separate(graph)
        total = sum(v.edge_count() for v in views)
        assert total == sum(graph.adjacencies[r].edge_count() for r in RELATIONS)

    def test_title_only_graph(self):
        n = 4
        upper = np.zeros((n, n), dtype=bool)
        upper[0, 1] = True
        edges = upper | upper.T
        graph = MultiRelationalTextGraph(
            n=n,
            node_order=tuple(f"x{i}" for i in range(n)),
            adjacencies={
                "title": RelationAdjacency("title", edges),
                "keyword": RelationAdjacency("keyword", np.zeros((n, n), dtype=bool)),
                "event": RelationAdjacency("event", np.zeros((n, n), dtype=bool)),
            },
        )
        views = separate(graph)
        assert views[0].edge_count() == 1
        assert views[1].edge_count() == 0
        assert views[2].edge_count() == 0


class TestAdjacencyValidation:
    def test_rejects_asymmetric(self):
        edges = np.zeros((3, 3), dtype=bool)
        edges[0, 1] = True
        with pytest.raises(ValueError, match="symmetric"):
            RelationAdjacency("title", edges)

    def test_rejects_self_loop(self):
        edges = np.eye(3, dtype=bool)
        with pytest.raises(ValueError, match="irreflexive"):
            RelationAdjacency("title", edges)

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            ThresholdConfig(rho_t=1.5)
        with pytest.raises(ValueError):
            ThresholdConfig(gamma_e=-1)


class TestExport:
    def test_sorted_edge_lists(self, rng):
        corpus = random_corpus(rng, 6, 4)
        graph = build_graph(corpus, ThresholdConfig(rho_t=0.0, rho_e=0.0, rho_k=0.0, gamma_e=0, gamma_k=0))
        doc = export_graph(graph)
        assert doc["n"] == 6
        assert doc["node_order"] == list(corpus.ids)
        for r in RELATIONS:
            pairs = doc["relations"][r]
            assert pairs == sorted(pairs)
            assert all(i < j for i, j in pairs)
            assert {(i, j) for i, j in pairs} == edge_set(graph.adjacencies[r].edges)
