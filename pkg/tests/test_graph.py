import itertools
import time

import numpy as np
import pytest

from betatri.errors import DomainError, ResourceCapError
from betatri.graph import (
    ENUM_MAX_N,
    EdgeIndex,
    GraphSample,
    all_edges,
    count_triangles_enum,
    count_triangles_matrix,
    count_triangles_wedge,
    dump_edge_list,
    edge_from_index,
    edge_index,
    load_edge_list,
    n_pairs,
    wedge_count,
)
from betatri.model import BlockDesign, ModelSpec, block_mu, sample_graph

COUNTERS = [count_triangles_enum, count_triangles_matrix, count_triangles_wedge]


def complete(n):
    return GraphSample.from_pairs(n, itertools.combinations(range(n), 2))


def cycle(n):
    return GraphSample.from_pairs(n, [(k, (k + 1) % n) for k in range(n)])


def random_graph(rng, n, p):
    adj = np.triu(rng.random((n, n)) < p, k=1)
    return GraphSample.from_adjacency(adj | adj.T)


class TestEdgeIndex:
    def test_bijection(self):
        n = 9
        seen = []
        for a in range(n_pairs(n)):
            e = edge_from_index(a, n)
            assert edge_index(e.i, e.j, n) == e
            assert edge_index(e.j, e.i, n) == e
            seen.append((e.i, e.j))
        assert seen == sorted(itertools.combinations(range(n), 2))
        i, j = all_edges(n)
        assert list(zip(i.tolist(), j.tolist())) == seen

    @pytest.mark.parametrize("pair", [(0, 0), (-1, 2), (1, 5)])
    def test_invalid_pair(self, pair):
        with pytest.raises(DomainError):
            edge_index(*pair, 5)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            edge_from_index(10, 5)


class TestGraphSample:
    def test_validation(self):
        with pytest.raises(DomainError):
            GraphSample.from_pairs(3, [(0, 0)])
        with pytest.raises(DomainError):
            GraphSample.from_pairs(3, [(0, 1), (1, 0)])
        with pytest.raises(DomainError):
            GraphSample.from_pairs(3, [(0, 3)])
        with pytest.raises(DomainError):
            GraphSample.from_adjacency(np.array([[0, 1], [0, 0]]))

    def test_sorted_neighbours_match_adjacency(self):
        g = random_graph(np.random.default_rng(3), 40, 0.2)
        for v in range(g.n):
            nb = g.neighbors(v)
            assert np.all(np.diff(nb) > 0)
            assert nb.tolist() == np.flatnonzero(g.adjacency[v]).tolist()
        assert g.degrees().sum() == 2 * g.m_present

    def test_immutable(self):
        g = complete(4)
        with pytest.raises(ValueError):
            g.src[0] = 3
        with pytest.raises(ValueError):
            g.adjacency[0, 1] = False

    def test_with_edge(self):
        g = GraphSample.from_pairs(4, [(0, 1)])
        h = g.with_edge(2, 1)
        assert h.has_edge(1, 2) and not g.has_edge(1, 2)
        assert h.with_edge(1, 2) is h

    def test_edge_list_roundtrip(self, tmp_path):
        g = random_graph(np.random.default_rng(4), 30, 0.3)
        path = tmp_path / "g.txt"
        dump_edge_list(g, path)
        first = path.read_text().splitlines()[0].split()
        assert int(first[0]) < int(first[1])
        assert load_edge_list(path, 30) == g


class TestCounters:
    @pytest.mark.parametrize("count", COUNTERS)
    def test_small_examples(self, count):
        assert count(complete(3)) == 1
        assert count(complete(4)) == 4
        assert count(complete(5)) == 10
        assert count(GraphSample.from_pairs(6, [])) == 0
        assert count(cycle(5)) == 0
        assert count(GraphSample.from_pairs(3, [(0, 1), (1, 2)])) == 0
        k33 = GraphSample.from_pairs(6, [(a, b) for a in range(3) for b in range(3, 6)])
        assert count(k33) == 0

    def test_matches_binomial_on_complete_graphs(self):
        for n in range(3, 25):
            want = n * (n - 1) * (n - 2) // 6
            assert all(count(complete(n)) == want for count in COUNTERS)

    def test_enum_cap(self):
        g = GraphSample.from_pairs(ENUM_MAX_N + 1, [(0, 1)])
        with pytest.raises(ResourceCapError):
            count_triangles_enum(g)

    def test_agreement_random_corpus(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = int(rng.integers(2, 201))
            g = random_graph(rng, n, float(rng.choice([0.01, 0.05, 0.2, 0.6])))
            t = count_triangles_enum(g)
            assert count_triangles_matrix(g) == t
            assert count_triangles_wedge(g) == t

    def test_counts_are_python_ints(self):
        g = complete(600)
        want = 600 * 599 * 598 // 6
        for count in COUNTERS:
            t = count(g)
            assert type(t) is int and t == want

    def test_wedge_benchmark(self):
        # n = 1e5, expected degree ~ 10, graph assembled directly
        rng = np.random.default_rng(0)
        n = 10**5
        pairs = rng.integers(0, n, size=(n * 5, 2))
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        pairs = np.unique(np.sort(pairs, axis=1), axis=0)
        g = GraphSample.from_edges(n, pairs[:, 0], pairs[:, 1])
        assert 9 < g.degrees().mean() < 11
        count_triangles_wedge(GraphSample.from_pairs(3, [(0, 1)]))  # warm the kernel
        start = time.perf_counter()
        t = count_triangles_wedge(g)
        elapsed = time.perf_counter() - start
        assert t == count_triangles_matrix(g)
        assert elapsed < 5.0


class TestWedges:
    def test_examples(self):
        g = complete(4)
        assert all(wedge_count(g, a) == 2 for a in range(n_pairs(4)))
        e = GraphSample.from_pairs(5, [])
        assert all(wedge_count(e, a) == 0 for a in range(n_pairs(5)))

    def test_accepts_edge_index(self):
        g = complete(4)
        assert wedge_count(g, edge_index(1, 3, 4)) == wedge_count(g, EdgeIndex(4, 1, 3)) == 2

    def test_independent_of_own_edge(self):
        g = GraphSample.from_pairs(4, [(0, 2), (1, 2), (0, 3), (1, 3)])
        a = edge_index(0, 1, 4).a
        assert wedge_count(g, a) == wedge_count(g.with_edge(0, 1), a) == 2

    def test_sum_over_present_edges_is_three_t(self):
        rng = np.random.default_rng(21)
        for _ in range(500):
            n = int(rng.integers(3, 25))
            g = random_graph(rng, n, float(rng.uniform(0.05, 0.9)))
            total = sum(wedge_count(g, edge_index(i, j, n))
                        for i, j in zip(g.src.tolist(), g.dst.tolist()))
            assert total == 3 * count_triangles_enum(g)
            assert all(0 <= wedge_count(g, a) <= n - 2 for a in range(n_pairs(n)))

    def test_toggle_identity(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            n = int(rng.integers(3, 30))
            g = random_graph(rng, n, float(rng.uniform(0.05, 0.7)))
            absent = [(i, j) for i, j in itertools.combinations(range(n), 2)
                      if not g.has_edge(i, j)]
            if not absent:
                continue
            i, j = absent[int(rng.integers(len(absent)))]
            v = wedge_count(g, edge_index(i, j, n))
            assert count_triangles_wedge(g.with_edge(i, j)) == count_triangles_wedge(g) + v


def test_sampled_corpus_agreement():
    rng = np.random.default_rng(5)
    for alpha in (0.2, 0.5, 0.8):
        d = BlockDesign((1.0, 2.0), alpha)
        for seed in range(40):
            n = int(rng.integers(3, 61))
            g = sample_graph(ModelSpec(block_mu(d, n)), seed)
            t = count_triangles_enum(g)
            assert count_triangles_matrix(g) == t == count_triangles_wedge(g)
