import numpy as np
import pytest
import scipy.sparse as sp

from admm_forge import build_coupling_graph, zoo
from admm_forge.problem import eval_objective, validate


def test_circuit_structure():
    prob = zoo.gen_circuit((1.0, 2.0, 4.0), (-1.0, 2.0, -1.0))
    assert [b.id for b in prob.blocks] == ["I1", "I2", "I3"]
    assert all(b.dim == 1 for b in prob.blocks)
    assert validate(prob) == []
    g = build_coupling_graph(prob)
    assert len(g.vertices) == 3 and len(g.edges) == 3


def test_circuit_objective_is_dissipated_power():
    prob = zoo.gen_circuit((1.0, 2.0, 4.0), (0.0, 0.0, 0.0))
    xs = {"I1": np.array([1.0]), "I2": np.array([2.0]), "I3": np.array([-1.0])}
    assert eval_objective(prob, xs) == pytest.approx(1.0 + 2.0 * 4.0 + 4.0)


def test_circuit_validation():
    with pytest.raises(ValueError, match="3 resistances"):
        zoo.gen_circuit((1.0, 2.0), (0.0, 0.0, 0.0))
    with pytest.raises(ValueError, match="positive"):
        zoo.gen_circuit((1.0, -2.0, 4.0), (0.0, 0.0, 0.0))
    with pytest.raises(ValueError, match="sum to zero"):
        zoo.gen_circuit((1.0, 2.0, 4.0), (1.0, 2.0, 3.0))


def test_network_flow_witness_is_exactly_feasible():
    prob, info = zoo.gen_network_flow(12, 20, seed=7)
    assert validate(prob) == []
    xs = info["witness_flow"]
    for con in prob.constraints:
        acc = np.zeros(len(con.rhs))
        for bid, m in con.terms:
            acc += m.apply(xs[bid])
        # feasibility is by construction, not by rounding
        assert np.array_equal(acc, np.asarray(con.rhs, dtype=float))


def test_network_flow_witness_respects_capacities():
    prob, info = zoo.gen_network_flow(10, 25, seed=3)
    for a, (bid, f) in enumerate(sorted(info["witness_flow"].items(),
                                        key=lambda kv: int(kv[0][1:]))):
        assert 0.0 <= f[0] <= info["capacities"][a]


def test_network_flow_supply_bound():
    _, info = zoo.gen_network_flow(30, 60, seed=1, supply_bound=5.0)
    assert np.abs(info["supplies"]).max() <= 5.0 * (1.0 + 1e-9)


def test_network_flow_parallel_arcs_beyond_simple_capacity():
    # 20 nodes support at most 190 simple edges; the rest are parallel
    prob, info = zoo.gen_network_flow(20, 200, seed=0)
    assert len(info["arcs"]) == 200
    assert len(prob.blocks) == 200
    assert len(prob.constraints) == 20
    undirected = [tuple(sorted(a)) for a in info["arcs"]]
    assert len(set(undirected)) < len(undirected)


def test_network_flow_validation():
    with pytest.raises(ValueError, match="at least 3 nodes"):
        zoo.gen_network_flow(2, 5, seed=0)
    with pytest.raises(ValueError, match="cycle backbone"):
        zoo.gen_network_flow(10, 9, seed=0)


def test_network_flow_deterministic():
    _, a = zoo.gen_network_flow(9, 14, seed=42)
    _, b = zoo.gen_network_flow(9, 14, seed=42)
    assert a["arcs"] == b["arcs"]
    assert np.array_equal(a["costs"], b["costs"])


def _connected(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    return len({find(i) for i in range(n)}) == 1


def test_consensus_graph_connected_and_sized():
    for seed in range(6):
        edges, standard, direct = zoo.gen_consensus_ls(12, seed=seed, dim=3,
                                                       rows=4)
        assert _connected(12, edges)
        assert len(edges) >= 11
        assert len(direct.blocks) == 12
        assert len(direct.constraints) == len(edges)
        assert len(standard.blocks) == 12 + len(edges)
        assert len(standard.constraints) == 2 * len(edges)
        assert validate(direct) == []
        assert validate(standard) == []


def test_consensus_direct_graph_is_communication_graph():
    edges, _, direct = zoo.gen_consensus_ls(9, seed=2, dim=2, rows=3)
    g = build_coupling_graph(direct)
    assert len(g.vertices) == 9
    got = {tuple(sorted((int(e.u[1:]), int(e.v[1:])))) for e in g.edges}
    assert got == {tuple(sorted(e)) for e in edges}


def test_consensus_forms_agree_at_consensus_points():
    edges, standard, direct = zoo.gen_consensus_ls(5, seed=0, dim=3, rows=4)
    rng = np.random.default_rng(1)
    x = rng.standard_normal(3)
    xs = {f"x{i}": x for i in range(5)}
    zs = dict(xs)
    for u, v in edges:
        zs[f"z{u}_{v}"] = x
    assert eval_objective(direct, xs) == pytest.approx(
        eval_objective(standard, zs))


def test_consensus_validation():
    with pytest.raises(ValueError, match="at least 2 agents"):
        zoo.gen_consensus_ls(1, seed=0)


def test_cocluster_validation():
    with pytest.raises(ValueError, match="empty"):
        zoo.cocluster(np.zeros((0, 3)), 2, 1)
    with pytest.raises(ValueError, match="k"):
        zoo.cocluster(np.ones((2, 2)), 0, 1)
    with pytest.raises(ValueError, match="passes"):
        zoo.cocluster(np.ones((2, 2)), 2, 0)


def test_cocluster_single_cluster():
    rows, cols = zoo.cocluster(np.ones((3, 4)), 1, 2)
    assert np.array_equal(rows, np.zeros(3, dtype=int))
    assert np.array_equal(cols, np.zeros(4, dtype=int))


def test_cocluster_tie_breaks_to_smaller_index():
    # both columns start in different clusters; the row sees one of each
    rows, _ = zoo.cocluster(np.array([[1.0, 1.0]]), 2, 1)
    assert rows[0] == 0


def test_cocluster_recovers_planted_blocks():
    rng = np.random.default_rng(0)
    k = 3
    widths = [4, 7, 10]   # each is 1 mod k, so the cyclic start separates them
    heights = [3, 5, 4]
    mats = [rng.uniform(0.5, 2.0, size=(h, w)) *
            np.sign(rng.standard_normal((h, w)))
            for h, w in zip(heights, widths)]
    a = sp.block_diag(mats, format="csr")
    row_of, col_of = zoo.cocluster(a, k, passes=3)
    r0 = 0
    for t, (h, w) in enumerate(zip(heights, widths)):
        assert len(set(row_of[r0:r0 + h].tolist())) == 1
        r0 += h
    # distinct blocks land in distinct clusters
    starts = np.cumsum([0] + heights[:-1])
    assert len({row_of[s] for s in starts}) == k


def test_lp_cocluster_structure():
    # two dense 2x3 blocks plus one bridging equality row; the bridge row
    # joins cluster 0, giving one two-block equality group and one
    # single-block group that needs a slack
    b1 = np.ones((2, 3))
    b2 = np.ones((2, 3)) * 2.0
    a = np.zeros((5, 6))
    a[0:2, 0:3] = b1
    a[2:4, 3:6] = b2
    a[4, :] = 1.0
    n = 6
    c = np.arange(1.0, 7.0)
    lo = np.zeros(n)
    hi = np.full(n, 4.0)
    rhs = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    prob, info = zoo.lp_cocluster(a, c, lo, hi, rhs, rhs, k=2, passes=2)
    assert np.array_equal(info["col_clusters"], [0, 0, 0, 1, 1, 1])
    assert np.array_equal(info["row_clusters"], [0, 0, 1, 1, 0])
    ids = [b.id for b in prob.blocks]
    assert ids == ["xc0", "xc1", "s1"]
    assert [b.dim for b in prob.blocks] == [3, 3, 2]
    by_id = {con.id: con for con in prob.constraints}
    # equality group with two blocks keeps its right-hand side
    assert [bid for bid, _ in by_id["rc0"].terms] == ["xc0", "xc1"]
    assert np.array_equal(by_id["rc0"].rhs, rhs[[0, 1, 4]])
    # single-block group gets a slack and a homogeneous row
    assert [bid for bid, _ in by_id["rc1"].terms] == ["xc1", "s1"]
    assert np.array_equal(by_id["rc1"].rhs, [0.0, 0.0])
    assert validate(prob) == []


def test_lp_cocluster_inequality_rows_get_slack():
    a = np.ones((2, 4))
    prob, _ = zoo.lp_cocluster(a, np.ones(4), np.zeros(4), np.ones(4),
                               np.zeros(2), np.ones(2), k=1, passes=1)
    ids = [b.id for b in prob.blocks]
    assert ids == ["xc0", "s0"]
    slack = prob.blocks[1]
    assert np.array_equal(slack.prox.lower, [0.0, 0.0])
    assert np.array_equal(slack.prox.upper, [1.0, 1.0])


def test_lp_cocluster_zero_row_raises():
    a = np.zeros((1, 2))
    with pytest.raises(ValueError, match="touches no blocks"):
        zoo.lp_cocluster(a, np.ones(2), np.zeros(2), np.ones(2),
                         np.zeros(1), np.zeros(1), k=1, passes=1)
