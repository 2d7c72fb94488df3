import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ricci_community import (
    DiscreteMeasure,
    DomainError,
    Graph,
    ParseError,
    Partition,
    UnreachableError,
    connected_components,
    distance_rows,
    load_edge_list,
    local_distances,
    neighbor_measure,
    read_labels,
    shortest_distance,
    write_edge_list,
    write_partition,
)

from conftest import bfs_hops, complete_graph, grid_graph, path_graph, random_graph


# -- construction -----------------------------------------------------------


def test_graph_stores_canonical_edges():
    g = Graph(3, [(2, 0, 1.5), (1, 2)])
    assert g.edges == [(0, 2, 1.5), (1, 2, 1.0)]
    assert g.edge_count == 2
    assert g.degree(2) == 2
    assert sorted(g.neighbors(2)) == [0, 1]


def test_adjacency_is_symmetric():
    g = Graph(4, [(0, 1, 2.0), (1, 2, 3.0), (0, 3, 0.5)])
    adj = g.adjacency
    for u, v, w in g.edges:
        assert (v, w) in adj[u]
        assert (u, w) in adj[v]


@pytest.mark.parametrize("edges", [
    [(0, 0)],
    [(0, 1), (1, 0)],
    [(0, 1, 0.0)],
    [(0, 1, -1.0)],
    [(0, 1, float("nan"))],
    [(0, 5)],
])
def test_graph_rejects_invalid_edges(edges):
    with pytest.raises(DomainError):
        Graph(3, edges)


def test_weights_are_read_only():
    g = Graph(2, [(0, 1)])
    with pytest.raises(ValueError):
        g.weights[0] = 2.0


def test_with_weights_validates():
    g = Graph(3, [(0, 1), (1, 2)])
    h = g.with_weights([2.0, 3.0])
    assert h.weights.tolist() == [2.0, 3.0]
    assert g.weights.tolist() == [1.0, 1.0]
    with pytest.raises(DomainError):
        g.with_weights([1.0, 0.0])
    with pytest.raises(DomainError):
        g.with_weights([1.0])


def test_keep_edges_keeps_nodes():
    g = Graph(3, [(0, 1), (1, 2)])
    h = g.keep_edges([True, False])
    assert h.node_count == 3
    assert h.edges == [(0, 1, 1.0)]


# -- edge-list input ---------------------------------------------------------


def test_load_default_weights():
    g = load_edge_list("0 1\n1 2\n")
    assert g.node_count == 3
    assert g.edge_count == 2
    assert g.weights.tolist() == [1.0, 1.0]


def test_load_arbitrary_tokens():
    g = load_edge_list("a b 2.5\nb c 0.5\n")
    assert g.labels == ("a", "b", "c")
    assert [g.id_of(t) for t in "abc"] == [0, 1, 2]
    assert sorted(g.weights.tolist()) == [0.5, 2.5]


def test_load_comments_and_blank_lines():
    g = load_edge_list("# header\n\n  x y\n# trailing\n")
    assert g.edge_count == 1


def test_load_accepts_file_objects():
    g = load_edge_list(io.StringIO("1 2\n2 3\n"))
    assert g.edge_count == 2


def test_load_karate(karate):
    g, truth = karate
    assert g.node_count == 34
    assert g.edge_count == 78
    assert set(g.weights.tolist()) == {1.0}
    assert truth.num_communities == 2
    assert sorted(truth.sizes().tolist()) == [17, 17]


@pytest.mark.parametrize("text,line", [("0 1\n0\n", 2), ("0 1 x\n", 1), ("0 1 2 3\n", 1)])
def test_parse_errors_report_line(text, line):
    with pytest.raises(ParseError) as info:
        load_edge_list(text)
    assert info.value.lineno == line
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize("text", ["0 1 0\n", "0 1 -2\n", "0 1\n1 0\n", "3 3\n"])
def test_domain_errors_on_load(text):
    with pytest.raises(DomainError):
        load_edge_list(text)


def test_edge_list_round_trip():
    g = load_edge_list("a b 0.1\nb c 3\nc a 1e-3\n")
    buf = io.StringIO()
    write_edge_list(g, buf)
    h = load_edge_list(buf.getvalue())
    assert h.labels == g.labels
    assert h.edges == g.edges


def test_labels_flatten_overlaps():
    labels = read_labels("a 1\nb 1\nb 2\nc 2\n")
    assert labels == {"a": "1", "b": "1+2", "c": "2"}


def test_partition_round_trip():
    g = load_edge_list("a b\nb c\nc d\n")
    part = Partition([0, 0, 1, 1])
    buf = io.StringIO()
    write_partition(g, part, buf)
    again = Partition.from_mapping(read_labels(buf.getvalue()), g)
    assert again == part


def test_partition_missing_node():
    g = load_edge_list("a b\nb c\n")
    with pytest.raises(DomainError):
        Partition.from_mapping({"a": 0, "b": 0}, g)


# -- Partition -------------------------------------------------------------


def test_partition_canonical_labels():
    assert Partition([5, 5, 2, 9, 2]).labels.tolist() == [0, 0, 1, 2, 1]
    assert Partition(np.array([5, 5, 2, 9, 2])).labels.tolist() == [0, 0, 1, 2, 1]
    assert Partition(["x", "y", "x"]) == Partition([1, 0, 1])


@given(st.lists(st.integers(0, 6), min_size=1, max_size=30))
def test_partition_array_and_list_paths_agree(raw):
    assert Partition(np.array(raw)) == Partition(raw)


def test_partition_refines():
    fine = Partition([0, 1, 2, 2])
    coarse = Partition([0, 0, 1, 1])
    assert fine.refines(coarse)
    assert not coarse.refines(fine)


# -- distances ----------------------------------------------------------------


def test_path_distance():
    assert shortest_distance(path_graph(3), 0, 2) == 2.0


def test_detour_beats_direct_edge():
    g = Graph(3, [(0, 1, 5.0), (0, 2, 1.0), (2, 1, 1.0)])
    assert shortest_distance(g, 0, 1) == 2.0


def test_unreachable_marker():
    g = Graph(2)
    assert shortest_distance(g, 0, 1) is None
    assert shortest_distance(g, 1, 1) == 0.0


def test_invalid_node():
    with pytest.raises(DomainError):
        shortest_distance(path_graph(2), 0, 7)


def test_local_distances_zero_diagonal():
    assert local_distances(path_graph(3), [1], [1]).tolist() == [[0.0]]


def test_local_distances_unreachable_names_pair():
    g = Graph(3, [(0, 1)])
    with pytest.raises(UnreachableError) as info:
        local_distances(g, [0], [2])
    assert (info.value.source, info.value.target) == (0, 2)


def test_grid_local_distances_match_bfs_hops():
    g = grid_graph(5, 5)
    x, y = 12, 13  # interior edge
    src = [x] + g.neighbors(x)
    dst = [y] + g.neighbors(y)
    mat = local_distances(g, src, dst)
    for i, s in enumerate(src):
        hops = bfs_hops(g, s)
        for j, t in enumerate(dst):
            assert mat[i, j] == hops[t]
    assert set(mat.ravel().tolist()) <= {0.0, 1.0, 2.0, 3.0}


def test_batched_matches_single_pair(rng):
    g = random_graph(rng, 12, 0.4)
    full = distance_rows(g)
    for x in range(g.node_count):
        for y in range(g.node_count):
            d = shortest_distance(g, x, y)
            if d is None:
                assert math.isinf(full[x, y])
            else:
                assert abs(full[x, y] - d) <= 1e-12


@st.composite
def weighted_graphs(draw, max_nodes=9):
    n = draw(st.integers(2, max_nodes))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, min_size=1, max_size=len(pairs)))
    weights = draw(st.lists(st.floats(0.05, 10.0), min_size=len(chosen), max_size=len(chosen)))
    return Graph(n, [(u, v, w) for (u, v), w in zip(chosen, weights)])


@given(weighted_graphs())
def test_triangle_inequality(g):
    d = distance_rows(g)
    n = g.node_count
    for x in range(n):
        for y in range(n):
            for z in range(n):
                if np.isfinite(d[x, z]):
                    assert d[x, y] + d[y, z] >= d[x, z] - 1e-9


@given(weighted_graphs())
def test_distance_at_most_edge_weight(g):
    d = distance_rows(g)
    for u, v, w in g.edges:
        assert d[u, v] <= w


@given(weighted_graphs(), st.floats(0.1, 20.0))
def test_distances_scale_with_weights(g, c):
    d = distance_rows(g)
    dc = distance_rows(g.with_weights(g.weights * c))
    finite = np.isfinite(d)
    assert np.allclose(dc[finite], c * d[finite], rtol=1e-12, atol=0)


# -- measures --------------------------------------------------------------


def test_uniform_measure_at_p0():
    g = path_graph(3)
    m = neighbor_measure(g, 1, alpha=0.5, p=0.0)
    assert m.as_dict() == {1: 0.5, 0: 0.25, 2: 0.25}


def test_exponential_measure_values():
    g = Graph(3, [(0, 1, 1.0), (0, 2, 2.0)])
    m = neighbor_measure(g, 0, alpha=0.5, p=1.0, base=math.e).as_dict()
    c = math.exp(-1) + math.exp(-2)
    assert m[0] == 0.5
    assert abs(m[1] - 0.5 * math.exp(-1) / c) < 1e-12
    assert abs(m[2] - 0.5 * math.exp(-2) / c) < 1e-12
    assert abs(m[1] - 0.36553) < 1e-5
    assert abs(m[2] - 0.13447) < 1e-5


def test_lazy_free_measure_is_uniform_on_neighbours():
    g = Graph(5, [(0, i) for i in range(1, 5)])
    m = neighbor_measure(g, 0, alpha=0.0, p=0.0).as_dict()
    assert m[0] == 0.0
    assert all(m[i] == 0.25 for i in range(1, 5))


def test_measure_uses_shortest_path_not_weight():
    # The direct edge 0-1 is long but a detour through 2 is short.
    g = Graph(3, [(0, 1, 10.0), (0, 2, 1.0), (1, 2, 1.0)])
    m = neighbor_measure(g, 0, alpha=0.0, p=1.0).as_dict()
    assert abs(m[1] - math.exp(-2) / (math.exp(-2) + math.exp(-1))) < 1e-12


def test_measure_rejects_bad_input():
    g = Graph(3, [(0, 1)])
    with pytest.raises(DomainError):
        neighbor_measure(g, 2)
    with pytest.raises(DomainError):
        neighbor_measure(g, 0, alpha=1.5)
    with pytest.raises(DomainError):
        neighbor_measure(g, 0, p=-1.0)
    with pytest.raises(DomainError):
        neighbor_measure(g, 0, base=1.0)


def test_measure_survives_huge_distances():
    g = Graph(3, [(0, 1, 50.0), (0, 2, 60.0)])
    m = neighbor_measure(g, 0, alpha=0.5, p=2.0)
    assert abs(m.masses.sum() - 1.0) < 1e-12
    assert m.as_dict()[1] == pytest.approx(0.5)


@given(weighted_graphs(), st.floats(0.0, 1.0), st.floats(0.0, 4.0), st.floats(1.01, 20.0))
def test_measure_masses_sum_to_one(g, alpha, p, base):
    for x in range(g.node_count):
        if g.degree(x):
            m = neighbor_measure(g, x, alpha, p, base)
            assert abs(m.masses.sum() - 1.0) <= 1e-12
            assert np.all(m.masses >= 0)


def test_discrete_measure_invariants():
    with pytest.raises(DomainError):
        DiscreteMeasure([0, 1], [0.5, 0.6])
    with pytest.raises(DomainError):
        DiscreteMeasure([0, 0], [0.5, 0.5])
    with pytest.raises(DomainError):
        DiscreteMeasure([0, 1], [1.5, -0.5])


# -- components ---------------------------------------------------------------


def test_components_connected():
    assert connected_components(path_graph(4)).num_communities == 1


def test_components_two_triangles():
    g = Graph(6, complete_graph(3) + complete_graph(3, 3))
    part = connected_components(g)
    assert part.num_communities == 2
    assert sorted(part.sizes().tolist()) == [3, 3]


def test_components_edgeless():
    assert connected_components(Graph(5)).num_communities == 5


@given(weighted_graphs(), st.randoms(use_true_random=False))
def test_components_invariant_under_relabelling(g, rnd):
    perm = list(range(g.node_count))
    rnd.shuffle(perm)
    h = Graph(g.node_count, [(perm[u], perm[v], w) for u, v, w in g.edges])
    a = connected_components(g).labels
    b = connected_components(h).labels
    for x in range(g.node_count):
        for y in range(g.node_count):
            assert (a[x] == a[y]) == (b[perm[x]] == b[perm[y]])


@given(weighted_graphs())
def test_components_idempotent(g):
    part = connected_components(g)
    keep = part.labels[g.sources] == part.labels[g.targets]
    assert connected_components(g.keep_edges(keep)) == part
