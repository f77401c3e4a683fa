import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import ccdh_value, random_graph_edges
from rhdetect.graph import (
    Ccdh,
    DegreeHistogram,
    Graph,
    ccdh_from_histogram,
    ccdh_of,
    degree_histogram,
    pair_endpoints,
    pair_index,
    read_edge_list,
    smooth_eval,
    write_edge_list,
)

TRIANGLE = Graph(3, [(0, 1), (1, 2), (0, 2)])
PATH3 = Graph(3, [(0, 1), (1, 2)])
STAR5 = Graph(6, [(0, i) for i in range(1, 6)])


@st.composite
def graphs(draw, max_n=25):
    n = draw(st.integers(0, max_n))
    if n < 2:
        return Graph(n)
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])
    return Graph(n, draw(st.lists(pairs, max_size=3 * n)))


def test_graph_normalizes_edges():
    g = Graph(4, [(2, 1), (1, 2), (3, 0)])
    assert g.edges.tolist() == [[0, 3], [1, 2]]
    assert g.num_edges == 2
    assert g.degrees.tolist() == [1, 1, 1, 1]


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 5)], [(-1, 2)]])
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(ValueError):
        Graph(3, edges)


def test_graph_is_immutable():
    with pytest.raises(ValueError):
        TRIANGLE.edges[0, 0] = 2


def test_has_edge_and_equality():
    assert PATH3.has_edge(1, 0) and not PATH3.has_edge(0, 2)
    assert Graph(3, [(1, 0), (2, 1)]) == PATH3
    assert hash(Graph(3, [(1, 0), (2, 1)])) == hash(PATH3)
    assert PATH3.add_edges([(0, 2)]) == TRIANGLE


def test_complement():
    g = Graph(5, [(0, 1), (2, 4)])
    c = g.complement()
    assert c.num_edges == 10 - 2
    assert not (g.edge_set() & c.edge_set())


@given(st.integers(2, 60), st.data())
def test_pair_index_round_trip(n, data):
    u = data.draw(st.integers(0, n - 2))
    v = data.draw(st.integers(u + 1, n - 1))
    idx = pair_index(n, u, v)
    assert 0 <= idx < n * (n - 1) // 2
    uu, vv = pair_endpoints(n, np.array([idx]))
    assert (uu[0], vv[0]) == (u, v)


def test_pair_index_is_row_major():
    n = 7
    iu, ju = np.triu_indices(n, 1)
    assert np.array_equal(pair_index(n, iu, ju), np.arange(len(iu)))
    u, v = pair_endpoints(n, np.arange(len(iu)))
    assert np.array_equal(u, iu) and np.array_equal(v, ju)


@pytest.mark.parametrize(
    "g, expected",
    [(TRIANGLE, [3, 3]), (PATH3, [3, 1]), (Graph(5), []), (STAR5, [6, 1, 1, 1, 1])],
)
def test_ccdh_examples(g, expected):
    assert ccdh_of(g).counts.tolist() == expected


def test_ccdh_validation():
    with pytest.raises(ValueError):
        Ccdh([1, 2])
    with pytest.raises(ValueError):
        Ccdh([2, 0])
    c = Ccdh([3, 1])
    assert c.at(1) == 3 and c.at(2) == 1 and c.at(9) == 0
    assert c.max_degree == 2 and bool(c) and not Ccdh([])


@pytest.mark.parametrize("d, expected", [(1.5, 2.0), (2, 1.0), (2.5, 0.5), (3, 0.0), (10, 0.0), (1, 3.0)])
def test_smooth_eval_examples(d, expected):
    assert smooth_eval(Ccdh([3, 1]), d) == pytest.approx(expected, abs=1e-12)


def test_smooth_eval_empty_and_domain():
    assert smooth_eval(Ccdh([]), 4.2) == 0.0
    with pytest.raises(ValueError):
        smooth_eval(Ccdh([3, 1]), 0.5)
    out = smooth_eval(Ccdh([3, 1]), np.array([1.0, 1.5, 2.5]))
    assert out.tolist() == [3.0, 2.0, 0.5]


@settings(max_examples=60)
@given(graphs(), st.floats(1.0, 40.0))
def test_smooth_eval_matches_reference(g, d):
    c = ccdh_of(g)
    assert smooth_eval(c, d) == pytest.approx(ccdh_value(c.counts, d), abs=1e-9)


@given(graphs())
def test_ccdh_invariants(g):
    c = ccdh_of(g)
    assert np.all(np.diff(c.counts) <= 0)
    assert (c.counts[0] if c else 0) == int(np.count_nonzero(g.degrees))
    for k in range(1, len(c) + 1):
        assert smooth_eval(c, k) == c.at(k)
    xs = np.linspace(1, len(c) + 2, 97)
    assert np.all(np.diff(smooth_eval(c, xs)) <= 1e-12)


def test_degree_histogram_examples():
    assert degree_histogram(TRIANGLE).counts == {2: 3}
    assert degree_histogram(STAR5).counts == {1: 5, 5: 1}
    assert degree_histogram(Graph(4)).counts == {}
    assert DegreeHistogram({2: 3}).to_ccdh() == Ccdh([3, 3])


def test_histogram_round_trip_random_graphs():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        g = Graph(n, random_graph_edges(rng, n, float(rng.uniform(0, 0.3))))
        assert ccdh_from_histogram(degree_histogram(g)) == ccdh_of(g)


def test_edge_list_round_trip(tmp_path):
    g = Graph(6, [(0, 5), (1, 2)])
    path = tmp_path / "g.txt"
    write_edge_list(g, path, comments=["hello"])
    assert path.read_text().splitlines()[:3] == ["n=6", "# hello", "0 5"]
    h, comments = read_edge_list(path)
    assert h == g and comments == ["hello"]
    buf = io.StringIO()
    write_edge_list(Graph(3), buf)
    assert read_edge_list(io.StringIO(buf.getvalue()))[0] == Graph(3)


def test_edge_list_errors():
    with pytest.raises(ValueError, match="header"):
        read_edge_list(io.StringIO("0 1\n"))
    with pytest.raises(ValueError, match="line 2"):
        read_edge_list(io.StringIO("n=3\n0 1 2\n"))
