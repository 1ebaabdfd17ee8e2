import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelspace.graph import (CommunityAssignment, LabelGraph, build_cooccurrence_graph,
                              communities_to_partition, connected_components, greedy_modularity,
                              label_propagation, modularity)
from labelspace.sparse import csr_from_coords, forbid_densify

from oracles import best_modularity, cooccurrence_bruteforce, dense_rows, modularity_direct

TWO_TRIANGLES = LabelGraph(6, {(0, 1): 1, (0, 2): 1, (1, 2): 1, (3, 4): 1, (3, 5): 1, (4, 5): 1})


def random_graph(rng, n, p=0.4, weighted=True):
    edges = {}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges[(u, v)] = float(rng.integers(1, 5)) if weighted else 1.0
    return LabelGraph(n, edges)


def rows_matrix(rows, L):
    return csr_from_coords([(i, j) for i, r in enumerate(rows) for j in r], len(rows), L)


class TestCooccurrence:
    def test_identity_has_no_edges(self):
        assert build_cooccurrence_graph(rows_matrix([[0], [1]], 2)).edges == {}

    def test_weighted_count(self):
        g = build_cooccurrence_graph(rows_matrix([[0, 1]] * 3, 2))
        assert g.edges == {(0, 1): 3}

    def test_unweighted(self):
        g = build_cooccurrence_graph(rows_matrix([[0, 1], [1, 2]], 3), weighted=False)
        assert g.edges == {(0, 1): 1, (1, 2): 1}

    def test_no_columns(self):
        with pytest.raises(ValueError):
            build_cooccurrence_graph(csr_from_coords([], 2, 0))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        n, L = int(rng.integers(1, 51)), int(rng.integers(1, 11))
        Y = csr_from_coords([(i, j) for i in range(n) for j in range(L) if rng.random() < 0.3], n, L)
        expected = cooccurrence_bruteforce(dense_rows(Y))
        with forbid_densify():
            g = build_cooccurrence_graph(Y)
        assert g.edges == expected
        for (u, v), w in g.edges.items():
            assert g.neighbors(u)[v] == g.neighbors(v)[u] == w


class TestModularity:
    def test_all_in_one_is_zero(self):
        assert modularity(TWO_TRIANGLES, [0] * 6) == 0.0

    def test_single_edge_singletons(self):
        assert modularity(LabelGraph(2, {(0, 1): 1}), [0, 1]) == -0.5

    def test_two_disjoint_edges(self):
        g = LabelGraph(4, {(0, 1): 1, (2, 3): 1})
        assert modularity(g, [0, 0, 1, 1]) == pytest.approx(0.5, abs=1e-15)
        assert modularity_direct(4, g.edges, [0, 0, 1, 1]) == pytest.approx(0.5, abs=1e-15)

    def test_two_triangles(self):
        assert modularity(TWO_TRIANGLES, [0, 0, 0, 1, 1, 1]) == pytest.approx(0.5, abs=1e-15)

    def test_edgeless(self):
        with pytest.raises(ValueError):
            modularity(LabelGraph(3, {}), [0, 1, 2])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            modularity(TWO_TRIANGLES, [0, 0])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_direct_sum(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        g = random_graph(rng, n, 0.5)
        if not g.edges:
            return
        a = CommunityAssignment.compact(rng.integers(0, n, n))
        q = modularity(g, a)
        assert q == pytest.approx(modularity_direct(n, g.edges, a), abs=1e-12)
        assert -1 <= q <= 1
        assert modularity(g, [0] * n) == 0.0


class TestLabelPropagation:
    def test_edgeless_singletons(self):
        assert label_propagation(LabelGraph(4, {}), seed=3) == (0, 1, 2, 3)

    @pytest.mark.parametrize("seed", range(20))
    def test_two_triangles(self, seed):
        assert label_propagation(TWO_TRIANGLES, seed=seed) == (0, 0, 0, 1, 1, 1)

    @pytest.mark.parametrize("seed", range(20))
    def test_clique_single_community(self, seed):
        clique = LabelGraph(5, {(u, v): 1 for u in range(5) for v in range(u + 1, 5)})
        assert label_propagation(clique, seed=seed) == (0,) * 5

    def test_deterministic(self):
        g = random_graph(np.random.default_rng(1), 12)
        assert label_propagation(g, seed=4) == label_propagation(g, seed=4)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_respects_components(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, int(rng.integers(1, 12)), 0.2)
        comp = connected_components(g)
        a = label_propagation(g, seed=seed % 1000)
        for u in range(g.n_labels):
            for v in range(g.n_labels):
                if a[u] == a[v]:
                    assert comp[u] == comp[v]


class TestGreedy:
    def test_single_edge_merges(self):
        assert greedy_modularity(LabelGraph(2, {(0, 1): 1})) == (0, 0)

    def test_two_triangles_optimal(self):
        a = greedy_modularity(TWO_TRIANGLES)
        assert a == (0, 0, 0, 1, 1, 1)
        assert modularity(TWO_TRIANGLES, a) == pytest.approx(best_modularity(6, TWO_TRIANGLES.edges),
                                                            abs=1e-12)

    def test_isolated_labels_stay_single(self):
        g = LabelGraph(4, {(1, 2): 1})
        assert greedy_modularity(g) == (0, 1, 1, 2)

    def test_edgeless(self):
        with pytest.raises(ValueError):
            greedy_modularity(LabelGraph(3, {}))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_beats_baselines(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        g = random_graph(rng, n)
        if not g.edges:
            return
        a = greedy_modularity(g)
        q = modularity(g, a)
        assert q >= modularity(g, range(n)) - 1e-12
        assert q >= modularity(g, [0] * n) - 1e-12
        assert q <= best_modularity(n, g.edges) + 1e-12
        comp = connected_components(g)
        assert all(comp[u] == comp[v] for u in range(n) for v in range(n) if a[u] == a[v])

    @pytest.mark.parametrize("sizes", [(2, 2), (3, 3), (2, 4), (3, 2, 1)])
    def test_clique_family_reaches_optimum(self, sizes):
        edges, start = {}, 0
        for s in sizes:
            edges.update({(u, v): 1 for u in range(start, start + s) for v in range(u + 1, start + s)})
            start += s
        g = LabelGraph(start, edges)
        assert modularity(g, greedy_modularity(g)) == pytest.approx(best_modularity(start, edges),
                                                                    abs=1e-12)


class TestPartitionConversion:
    def test_examples(self):
        assert communities_to_partition([0, 0, 1]).as_lists() == [[0, 1], [2]]
        assert communities_to_partition([0, 1, 2]).as_lists() == [[0], [1], [2]]
        assert communities_to_partition([0] * 4).as_lists() == [[0, 1, 2, 3]]

    def test_non_dense_ids_rejected(self):
        with pytest.raises(ValueError):
            CommunityAssignment([0, 2])

    def test_compact_first_appearance(self):
        assert CommunityAssignment.compact([7, 3, 7, 9]) == (0, 1, 0, 2)


def test_edge_list_round_trip():
    g = random_graph(np.random.default_rng(2), 7)
    text = g.to_edge_list()
    lines = text.splitlines()
    assert lines == sorted(lines, key=lambda s: tuple(map(int, s.split()[:2])))
    assert LabelGraph.from_edge_list(text, 7) == g


def test_edge_validation():
    for edges in ({(0, 0): 1}, {(0, 3): 1}, {(0, 1): 0}):
        with pytest.raises(ValueError):
            LabelGraph(3, edges)
