import math
from collections import Counter, deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbwalk.errors import ParameterError, StructureError
from rbwalk.graphgen import (
    Color,
    ColoredGraph,
    analyze_structure,
    cycle_graph,
    gen_hamilton_union,
    gen_regular,
    gen_twofactor_union,
    gen_union,
    second_eigenvalue,
    single_color_graph,
    small_cycle_threshold,
)

from oracles import is_bipartite, labelled_cubic_graphs_6


def degrees(n, edges):
    return np.bincount(np.asarray(edges).ravel(), minlength=n)


def is_simple(edges):
    e = [tuple(sorted(x)) for x in np.asarray(edges).tolist()]
    return all(u != v for u, v in e) and len(set(e)) == len(e)


# -- generators -------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(n=st.integers(5, 60), d=st.integers(1, 4), seed=st.integers(0, 2**32))
def test_gen_regular_is_simple_and_regular(n, d, seed):
    if n * d % 2 or n <= d:
        with pytest.raises(ParameterError):
            gen_regular(n, d, seed)
        return
    e = gen_regular(n, d, seed)
    assert e.shape == (n * d // 2, 2)
    assert np.all(e[:, 0] < e[:, 1])
    assert np.all(degrees(n, e) == d)
    assert is_simple(e)


def test_gen_regular_parity_message():
    with pytest.raises(ParameterError, match="n·d must be even"):
        gen_regular(5, 3, 0)
    with pytest.raises(ParameterError, match="n > d"):
        gen_regular(3, 3, 0)


def test_gen_regular_seeded():
    assert np.array_equal(gen_regular(1000, 3, 1), gen_regular(1000, 3, 1))
    assert not np.array_equal(gen_regular(1000, 3, 1), gen_regular(1000, 3, 2))
    e = gen_regular(1000, 3, 1)
    assert len(e) == 1500 and np.all(degrees(1000, e) == 3)


def test_configuration_model_is_uniform_on_six_vertices():
    # 70 labelled cubic graphs on 6 vertices: 10 copies of K_{3,3}, 60 prisms
    graphs = labelled_cubic_graphs_6()
    assert len(graphs) == 70
    bip = {g for g in graphs if is_bipartite(6, g)}
    assert len(bip) == 10
    rng = np.random.default_rng(12345)
    samples = 7000
    counts = Counter(frozenset(map(tuple, gen_regular(6, 3, rng).tolist())) for _ in range(samples))
    assert set(counts) <= set(graphs)
    # per-graph chi-square against the uniform law on 70 graphs
    obs = np.array([counts.get(g, 0) for g in graphs])
    from scipy.stats import chisquare

    assert chisquare(obs).pvalue > 1e-3
    frac_bip = sum(counts[g] for g in bip) / samples
    assert abs(frac_bip - 1 / 7) < 4 * math.sqrt((1 / 7) * (6 / 7) / samples)


@pytest.mark.parametrize("n,r,b", [(10, 1, 2), (20, 2, 2), (30, 1, 3), (12, 3, 2)])
def test_gen_union_degrees(n, r, b):
    g = gen_union(n, r, b, seed=7)
    assert (g.n, g.r, g.b) == (n, r, b)
    assert len(g.edges) == n * (r + b) // 2
    for c, k in ((Color.RED, r), (Color.BLUE, b)):
        e = g.edges_of(c)
        assert np.all(degrees(n, e) == k)
        assert is_simple(e)


def test_gen_union_allows_red_blue_parallels():
    # over many small unions some red edge duplicates a blue one
    found = False
    for s in range(200):
        g = gen_union(6, 1, 2, s)
        red = set(map(tuple, g.edges_of(Color.RED).tolist()))
        blue = set(map(tuple, g.edges_of(Color.BLUE).tolist()))
        if red & blue:
            found = True
            break
    assert found


def test_gen_union_parity_and_degree_errors():
    with pytest.raises(ParameterError, match="n·r must be even"):
        gen_union(5, 1, 2, 0)
    with pytest.raises(ParameterError):
        gen_union(10, 0, 2, 0)
    with pytest.raises(ParameterError):
        gen_union(10, 1, 1, 0)


def test_hamilton_union_blue_is_one_cycle():
    for s in range(5):
        g = gen_hamilton_union(6, 1, s)
        assert g.blue_cycle_lengths() == (6,)
    g = gen_hamilton_union(1001 + 1, 1, 3)
    assert g.blue_cycle_lengths() == (1002,)
    assert np.all(degrees(g.n, g.edges_of(Color.RED)) == 1)


def test_twofactor_union_blue_is_two_regular():
    g = gen_twofactor_union(500, 1, 4)
    assert sum(g.blue_cycle_lengths()) == 500
    assert min(g.blue_cycle_lengths()) >= 3
    # the blue part is drawn first, so it matches gen_regular(n, 2) on the same seed
    blue = np.sort(g.edges_of(Color.BLUE), axis=0)
    assert np.array_equal(np.sort(gen_regular(500, 2, 4), axis=0), blue)


def test_twofactor_n3_is_triangle():
    g = single_color_graph(gen_regular(3, 2, 0), 3)
    assert g.blue_cycle_lengths() == (3,)


# -- the graph type ---------------------------------------------------------------


def test_adjacency_slots_red_first():
    g = gen_union(20, 2, 3, 1)
    for v in range(g.n):
        adj = g.adjacency(v)
        assert [c for _, c, _ in adj] == [Color.RED] * 2 + [Color.BLUE] * 3
        for w, c, e in adj:
            assert {v, w} == set(g.edges[e].tolist())
            assert g.colors[e] == c


def test_from_edges_validation():
    with pytest.raises(ParameterError, match="self-loop"):
        ColoredGraph.from_edges(3, [], [(0, 0), (1, 2)])
    with pytest.raises(ParameterError, match="parallel"):
        ColoredGraph.from_edges(2, [], [(0, 1), (0, 1)])
    with pytest.raises(ParameterError, match="not regular"):
        ColoredGraph.from_edges(4, [], [(0, 1), (1, 2)])
    # a red and a blue copy of the same pair is fine
    g = ColoredGraph.from_edges(2, [(0, 1)], [(0, 1)])
    assert (g.r, g.b) == (1, 1)


def test_arrays_are_read_only():
    g = cycle_graph(5)
    with pytest.raises(ValueError):
        g.nbr[0, 0] = 3


@settings(max_examples=30, deadline=None)
@given(n=st.sampled_from([6, 8, 10, 14]), r=st.integers(1, 2), b=st.integers(2, 3), seed=st.integers(0, 10**6))
def test_text_round_trip(n, r, b, seed):
    g = gen_union(n, r, b, seed)
    text = g.to_text()
    h = ColoredGraph.from_text(text)
    assert h == g
    assert h.to_text() == text
    assert text.splitlines()[0] == f"n {n} r {r} b {b}"
    assert len(text.splitlines()) == 1 + n * (r + b) // 2


def test_file_round_trip_is_byte_identical(tmp_path):
    g = gen_union(10, 1, 2, 7)
    p = tmp_path / "g.txt"
    g.save(p)
    q = tmp_path / "h.txt"
    ColoredGraph.load(p).save(q)
    assert p.read_bytes() == q.read_bytes()
    assert b"\r" not in p.read_bytes()


@pytest.mark.parametrize(
    "text",
    ["", "n 3 r 0\n", "n 3 r 0 b 2\n0 1 B\n1 2 B\n0 2 X\n", "n 3 r 0 b 2\n1 0 B\n1 2 B\n0 2 B\n", "n 3 r 1 b 2\n0 1 B\n1 2 B\n0 2 B\n"],
)
def test_from_text_rejects_malformed(text):
    with pytest.raises(ParameterError):
        ColoredGraph.from_text(text)


# -- structure ------------------------------------------------------------------


def test_small_cycle_threshold():
    assert small_cycle_threshold(100) == 2
    assert small_cycle_threshold(10**4) == 3
    assert small_cycle_threshold(10**7) == 4


def brute_tree_like(g, sigma):
    """Distances to short cycles found by exhaustive path enumeration."""
    adj = [[(int(g.nbr[v, k]), int(g.eid[v, k])) for k in range(g.d)] for v in range(g.n)]
    on_cycle = set()

    def dfs(root, v, used, depth):
        for w, e in adj[v]:
            if e in used:
                continue
            if w == root:
                on_cycle.add(root)
                return True
            if depth + 1 < sigma and dfs(root, w, used | {e}, depth + 1):
                return True
        return False

    for v in range(g.n):
        dfs(v, v, frozenset(), 0)
    dist = {v: 0 for v in on_cycle}
    q = deque(on_cycle)
    while q:
        x = q.popleft()
        for w, _ in adj[x]:
            if w not in dist:
                dist[w] = dist[x] + 1
                q.append(w)
    return {v for v in range(g.n) if dist.get(v, math.inf) > sigma}


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("sigma", [3, 4, 5])
def test_tree_like_matches_brute_force(seed, sigma):
    g = gen_union(40, 1, 2, seed)
    rep = analyze_structure(g, sigma=sigma)
    assert rep.locally_tree_like == brute_tree_like(g, sigma)
    assert rep.non_tree_like_count == g.n - len(rep.locally_tree_like)


def test_red_blue_parallel_pair_is_a_two_cycle():
    # 0-1 red and blue plus a blue 4-cycle gives a 2-cycle through 0 and 1
    red = [(0, 1), (2, 3)]
    blue = [(0, 1), (1, 2), (2, 3), (0, 3)]
    g = ColoredGraph.from_edges(4, red, blue)
    assert analyze_structure(g, sigma=2).locally_tree_like == frozenset()


def test_cycle_graph_structure():
    g = cycle_graph(50)
    rep = analyze_structure(g, sigma=4)
    assert rep.locally_tree_like == frozenset(range(50))
    assert rep.blue_cycle_lengths == (50,)
    # eigenvalues of the 50-cycle are cos(2 pi k / 50); -1 is one of them
    assert rep.lambda2 == pytest.approx(1.0, abs=1e-6)


def test_second_eigenvalue_matches_dense():
    g = gen_union(200, 1, 2, 3)
    P = g.adjacency_matrix.toarray() / g.d
    ev = np.sort(np.abs(np.linalg.eigvalsh(P)))[::-1]
    assert second_eigenvalue(g, tol=1e-13) == pytest.approx(ev[1], abs=1e-4)


def test_spectral_sanity_random_cubic():
    # Friedman: lambda2 of a random d-regular graph is near 2 sqrt(d-1) / d
    g = single_color_graph(gen_regular(2000, 3, 5), 2000)
    lam = second_eigenvalue(g)
    bound = 2 * math.sqrt(2) / 3
    assert bound - 0.05 < lam < bound + 0.03


def test_analyze_rejects_disconnected():
    blue = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
    g = ColoredGraph.from_edges(6, [], blue)
    assert not g.is_connected()
    assert g.blue_cycle_lengths() == (3, 3)
    with pytest.raises(StructureError):
        analyze_structure(g)


def test_blue_cycle_lengths_needs_b2():
    with pytest.raises(ParameterError):
        gen_union(10, 1, 3, 0).blue_cycle_lengths()
