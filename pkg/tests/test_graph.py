import pytest

from rcplab.graph import (
    Graph,
    GraphConstructionError,
    build,
    complete,
    cycle,
    from_edges,
    from_file,
    path,
    spanning_walk,
    star,
)


def test_complete_edge_counts():
    assert complete(2).n_edges == 1
    assert complete(6).n_edges == 15


def test_builders_shapes():
    assert path(4).n_edges == 3
    assert cycle(5).n_edges == 5
    assert star(5).n_edges == 4
    assert complete(1).n_edges == 0


def test_disconnected_custom_rejected():
    with pytest.raises(GraphConstructionError) as exc:
        from_edges([(0, 1), (2, 3)])
    assert "separated" in str(exc.value) or "disconnected" in str(exc.value)
    assert "[2, 3]" in str(exc.value)


def test_self_loop_and_duplicates_rejected():
    with pytest.raises(GraphConstructionError):
        Graph(2, ((0, 0),))
    with pytest.raises(GraphConstructionError):
        Graph(2, ((0, 1), (0, 1)))


def test_build_parser():
    g = build("complete:6")
    assert g.n_vertices == 6 and g.describe() == "complete:6"
    with pytest.raises(GraphConstructionError):
        build("hypercube:3")
    with pytest.raises(GraphConstructionError):
        build("complete:0")


def test_edge_file_roundtrip(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("# triangle plus a tail\n0 1\n1 2\n2 0\n2 3  # tail edge\n")
    g = from_file(str(f))
    assert g.n_vertices == 4 and g.n_edges == 4


def test_single_vertex_walk_empty():
    w = spanning_walk(complete(1))
    assert w.length == 0 and w.vertex_sequence == (0,)
    assert w.covers_all_pairs(complete(1))


def test_path3_walk():
    g = path(3)
    w = spanning_walk(g)
    assert w.vertex_sequence == (0, 1, 2, 1, 0, 1, 2, 1, 0)
    assert w.length == 8
    assert w.covers_all_pairs(g)


def test_star_needs_doubled_tour():
    g = star(4)  # center 0, leaves 1..3
    w = spanning_walk(g)
    half = w.vertex_sequence[: w.length // 2 + 1]
    # one tour misses some ordered leaf pair
    n = g.n_vertices
    seen = {(x, y) for i, x in enumerate(half) for y in half[i:]}
    assert any((x, y) not in seen for x in range(n) for y in range(n))
    assert w.covers_all_pairs(g)


def test_pair_coverage_exhaustive_small():
    for k in range(2, 9):
        for g in (complete(k), path(k), star(k)) + ((cycle(k),) if k >= 3 else ()):
            w = spanning_walk(g)
            assert w.covers_all_pairs(g), g.describe()
            assert w.length <= 4 * (g.n_vertices - 1)
            # walk property: consecutive vertices joined by the listed edge
            for i, eidx in enumerate(w.edge_sequence):
                u, v = g.edges[eidx]
                assert {w.vertex_sequence[i], w.vertex_sequence[i + 1]} == {u, v}
