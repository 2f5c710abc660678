import numpy as np
import pytest

from admm_forge import (BipartizationDecision, LinearMap, NonBipartiteError,
                        basic_decision, bfs_bipartize, build_coupling_graph,
                        import_decision, is_bipartite, materialize,
                        read_assignment, write_assignment, zoo)
import helpers


def triangle_graph():
    prob = zoo.gen_circuit((1e-6, 1e2, 1e8), (-50.0, 100.0, -50.0))
    return build_coupling_graph(prob)


def test_bfs_triangle_coloring_and_split():
    g = triangle_graph()
    dec = bfs_bipartize(g)
    assert dec.coloring == {"I1": 0, "I2": 1, "I3": 1}
    assert dec.edge_decisions["e:I1|I2"] == (0, 0)
    assert dec.edge_decisions["e:I1|I3"] == (0, 0)
    # both endpoints colored 1, so the new node goes to side 0
    assert dec.edge_decisions["e:I2|I3"] == (1, 0)
    assert dec.split_count() == 1


def test_dfs_triangle_also_single_split():
    g = triangle_graph()
    dec = bfs_bipartize(g, traversal="dfs")
    assert dec.split_count() == 1
    assert is_bipartite(materialize(g, dec).graph)[0]


def test_bfs_even_cycle_no_split():
    g = build_coupling_graph(helpers.mbp_from_edges(
        4, [(0, 1), (1, 2), (2, 3), (3, 0)]))
    dec = bfs_bipartize(g)
    assert dec.split_count() == 0


def test_bfs_odd_cycles_one_split():
    for n in (3, 5, 7, 11):
        edges = [(i, (i + 1) % n) for i in range(n)]
        g = build_coupling_graph(helpers.mbp_from_edges(n, edges))
        dec = bfs_bipartize(g)
        assert dec.split_count() == 1
        assert is_bipartite(materialize(g, dec).graph)[0]


def test_bfs_components_alternate_start_color():
    # two disjoint triangles: roots v0 and v3 get colors 0 and 1
    edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]
    g = build_coupling_graph(helpers.mbp_from_edges(6, edges))
    dec = bfs_bipartize(g)
    assert dec.coloring["v0"] == 0
    assert dec.coloring["v3"] == 1
    assert dec.split_count() == 2


def test_bfs_invalid_traversal():
    g = triangle_graph()
    with pytest.raises(ValueError):
        bfs_bipartize(g, traversal="zigzag")


def test_import_decision_sides():
    g = triangle_graph()
    dec = import_decision(g, {"I1": 0, "I2": 1, "I3": 1})
    assert dec.edge_decisions["e:I2|I3"] == (1, 0)
    dec = import_decision(g, {"I1": 1, "I2": 0, "I3": 0})
    assert dec.edge_decisions["e:I2|I3"] == (1, 1)
    # crossing edges keep (0, 0)
    assert dec.edge_decisions["e:I1|I2"] == (0, 0)


def test_import_decision_validates_coloring():
    g = triangle_graph()
    with pytest.raises(ValueError, match="coloring mismatch"):
        import_decision(g, {"I1": 0, "I2": 1})
    with pytest.raises(ValueError, match="coloring mismatch"):
        import_decision(g, {"I1": 0, "I2": 1, "I3": 0, "I9": 1})
    with pytest.raises(ValueError, match="color must be 0 or 1"):
        import_decision(g, {"I1": 0, "I2": 1, "I3": 2})


def test_basic_decision_splits_everything():
    g = triangle_graph()
    dec = basic_decision(g)
    assert all(c == 0 for c in dec.coloring.values())
    assert dec.split_count() == len(g.edges)
    assert all(s == (1, 1) for s in dec.edge_decisions.values())


def test_materialize_keeps_crossing_edge_orientation():
    g = build_coupling_graph(helpers.mbp_from_edges(2, [(0, 1)]))
    dec = import_decision(g, {"v0": 1, "v1": 0})
    bip = materialize(g, dec)
    e = bip.graph.edges[0]
    # left endpoint (side 0) stored first
    assert e.u == "v1" and e.v == "v0"
    assert bip.side == {"v0": 1, "v1": 0}


def test_materialize_split_leg_algebra():
    rng = np.random.default_rng(0)
    p = helpers.random_mbp(rng, max_blocks=4)
    g = build_coupling_graph(p)
    dec = basic_decision(g)
    bip = materialize(g, dec)
    xs = {v.id: rng.standard_normal(v.dim) for v in g.vertices}
    for e in g.edges:
        wid = f"w:{e.id}"
        w = bip.graph.vertex(wid)
        assert w.kind == "subdivision"
        assert w.dim == e.rhs.shape[0]
        assert w.smooth.kind == "zero" and w.prox.kind == "zero"
        leg_a = bip.graph.edge(f"{e.id}:a")
        leg_b = bip.graph.edge(f"{e.id}:b")
        # leg a: map_u x_u - w = 0, so w = map_u x_u
        wval = e.map_u.apply(xs[e.u])
        ra = leg_a.map_for(e.u).apply(xs[e.u]) + leg_a.map_for(wid).apply(wval)
        assert np.allclose(ra, leg_a.rhs)
        # leg b: map_v x_v + w = rhs recovers the original row
        rb = leg_b.map_for(e.v).apply(xs[e.v]) + leg_b.map_for(wid).apply(wval)
        combined = e.map_u.apply(xs[e.u]) + e.map_v.apply(xs[e.v])
        assert np.allclose(rb - leg_b.rhs, combined - e.rhs)


def test_materialize_rejects_conflicting_keep():
    g = triangle_graph()
    dec = BipartizationDecision(
        {"I1": 0, "I2": 1, "I3": 1},
        {"e:I1|I2": (0, 0), "e:I1|I3": (0, 0), "e:I2|I3": (0, 0)})
    with pytest.raises(NonBipartiteError):
        materialize(g, dec)


def test_materialize_sides_and_ids():
    g = triangle_graph()
    bip = materialize(g, bfs_bipartize(g))
    assert set(bip.left_ids) == {"I1", "w:e:I2|I3"}
    assert set(bip.right_ids) == {"I2", "I3"}
    assert bip.subdivision_ids == ["w:e:I2|I3"]
    m = bip.metrics()
    assert m.vertex_count == 4
    assert m.edge_count == 4
    assert m.average_degree == pytest.approx(2.0)
    assert m.balance_score == pytest.approx(1.0)


def test_materialized_graph_always_bipartite():
    rng = np.random.default_rng(1)
    for _ in range(25):
        p = helpers.random_graph_mbp(rng, max_vertices=12)
        g = build_coupling_graph(p)
        col = {v.id: int(rng.integers(0, 2)) for v in g.vertices}
        bip = materialize(g, import_decision(g, col))
        assert is_bipartite(bip.graph)[0]
        for e in bip.graph.edges:
            assert bip.side[e.u] == 0 and bip.side[e.v] == 1


def test_split_count_matches_same_color_edges():
    rng = np.random.default_rng(2)
    for _ in range(25):
        p = helpers.random_graph_mbp(rng, max_vertices=12)
        g = build_coupling_graph(p)
        col = {v.id: int(rng.integers(0, 2)) for v in g.vertices}
        dec = import_decision(g, col)
        expect = sum(1 for e in g.edges if col[e.u] == col[e.v])
        assert dec.split_count() == expect
        bip = materialize(g, dec)
        assert len(bip.graph.vertices) == len(g.vertices) + expect
        assert len(bip.graph.edges) == len(g.edges) + expect


def test_decision_json_round_trip():
    g = triangle_graph()
    dec = bfs_bipartize(g)
    back = BipartizationDecision.from_json(dec.to_json())
    assert back.coloring == dec.coloring
    assert back.edge_decisions == dec.edge_decisions


def test_bipartite_graph_json_round_trip():
    from admm_forge import BipartiteGraph
    g = triangle_graph()
    bip = materialize(g, bfs_bipartize(g))
    back = BipartiteGraph.from_json(bip.to_json())
    assert back.side == bip.side
    assert [e.id for e in back.graph.edges] == [e.id for e in bip.graph.edges]


def test_assignment_file_round_trip(tmp_path):
    col = {"I1": 0, "I2": 1, "w:e:a|b": 1}
    path = tmp_path / "assign.tsv"
    write_assignment(path, col)
    assert read_assignment(path) == col


def test_assignment_file_errors(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("I1\t0\nI1\t1\n")
    with pytest.raises(ValueError, match="duplicate"):
        read_assignment(path)
    path.write_text("I1\t2\n")
    with pytest.raises(ValueError, match="color must be"):
        read_assignment(path)
    path.write_text("I1 0 extra\n")
    with pytest.raises(ValueError, match="expected"):
        read_assignment(path)


def test_assignment_file_tolerates_comments_and_spaces(tmp_path):
    path = tmp_path / "a.tsv"
    path.write_text("# header\nI1\t0\n\nI2 1  # trailing note\n")
    assert read_assignment(path) == {"I1": 0, "I2": 1}


def test_materialize_then_import_round_trip(tmp_path):
    # externally stored coloring drives the same materialization
    g = triangle_graph()
    dec = bfs_bipartize(g)
    path = tmp_path / "col.tsv"
    write_assignment(path, dec.coloring)
    dec2 = import_decision(g, read_assignment(path))
    assert dec2.coloring == dec.coloring
    assert dec2.edge_decisions == dec.edge_decisions
