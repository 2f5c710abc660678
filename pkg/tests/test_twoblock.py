import numpy as np
import pytest

from admm_forge import (ProxFn, SmoothFn, assemble, basic_decision,
                        bfs_bipartize, build_coupling_graph,
                        eliminate_auxiliaries, materialize, residual, zoo)
import helpers


def circuit_two_block():
    prob = zoo.gen_circuit((1.0, 2.0, 4.0), (-1.0, 2.0, -1.0))
    g = build_coupling_graph(prob)
    return prob, g, assemble(materialize(g, bfs_bipartize(g)))


def test_sides_follow_partition():
    prob, g, two = circuit_two_block()
    # coloring puts I1 left, I2/I3 right, split node left
    assert [b.id for b in two.left_blocks] == ["I1", "w:e:I2|I3"]
    assert [b.id for b in two.right_blocks] == ["I2", "I3"]
    assert len(two.couplings) == 4


def test_coupling_indices_consistent():
    _, g, two = circuit_two_block()
    lids = [b.id for b in two.left_blocks]
    rids = [b.id for b in two.right_blocks]
    for c in two.couplings:
        assert 0 <= c.left < len(lids)
        assert 0 <= c.right < len(rids)
        assert c.map_left.in_dim == two.left_blocks[c.left].dim
        assert c.map_right.in_dim == two.right_blocks[c.right].dim
        assert c.map_left.out_dim == c.rhs.shape[0]
        assert c.map_right.out_dim == c.rhs.shape[0]


def test_objective_sums_both_sides():
    _, _, two = circuit_two_block()
    xs = [np.ones(b.dim) for b in two.left_blocks]
    zs = [np.ones(b.dim) for b in two.right_blocks]
    # quadratic R I^2 at I=1 plus zero for the split node
    assert two.objective(xs, zs) == pytest.approx(1.0 + 2.0 + 4.0)


def test_residual_per_coupling():
    _, _, two = circuit_two_block()
    xs = [np.zeros(b.dim) for b in two.left_blocks]
    zs = [np.zeros(b.dim) for b in two.right_blocks]
    rs = residual(two, xs, zs)
    assert len(rs) == len(two.couplings)
    for r, c in zip(rs, two.couplings):
        assert np.array_equal(r, -c.rhs)


def test_norm_bounds_dominate_operator_norms():
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = helpers.random_mbp(rng)
        g = build_coupling_graph(p)
        two = assemble(materialize(g, bfs_bipartize(g)))
        rows = sum(c.rhs.shape[0] for c in two.couplings)
        loff = np.cumsum([0] + [b.dim for b in two.left_blocks])
        roff = np.cumsum([0] + [b.dim for b in two.right_blocks])
        a = np.zeros((rows, loff[-1]))
        bmat = np.zeros((rows, roff[-1]))
        r = 0
        for c in two.couplings:
            m = c.rhs.shape[0]
            a[r:r + m, loff[c.left]:loff[c.left + 1]] = c.map_left.to_dense()
            bmat[r:r + m, roff[c.right]:roff[c.right + 1]] = c.map_right.to_dense()
            r += m
        na, nb = two.norm_bounds
        assert na >= np.linalg.svd(a, compute_uv=False)[0] - 1e-9
        assert nb >= np.linalg.svd(bmat, compute_uv=False)[0] - 1e-9


def test_assemble_objective_override():
    _, g, _ = circuit_two_block()
    bip = materialize(g, bfs_bipartize(g))
    override = {"I1": (SmoothFn.linear([5.0]), ProxFn.zero())}
    two = assemble(bip, side_objectives=override)
    i1 = [b for b in two.left_blocks if b.id == "I1"][0]
    assert i1.smooth.kind == "linear"
    # untouched vertices keep their own parts
    i2 = [b for b in two.right_blocks if b.id == "I2"][0]
    assert i2.smooth.kind == "quadratic"


def test_eliminate_recovers_original_system():
    rng = np.random.default_rng(1)
    for _ in range(15):
        p = helpers.random_mbp(rng, max_blocks=5)
        g = build_coupling_graph(p)
        a0, b0 = helpers.stacked_constraints(p)
        x0, *_ = np.linalg.lstsq(a0, b0, rcond=None)
        for decide in (basic_decision, bfs_bipartize):
            two = assemble(materialize(g, decide(g)))
            cons = eliminate_auxiliaries(two)
            # rebuild a stacked system over the original block layout
            offs, pos = {}, 0
            for b in p.blocks:
                offs[b.id] = pos
                pos += b.dim
            rows = sum(c.rhs.shape[0] for c in cons)
            a1 = np.zeros((rows, pos))
            b1 = np.zeros(rows)
            r = 0
            for c in cons:
                m = c.rhs.shape[0]
                for bid, mp in c.terms:
                    d = mp.to_dense()
                    a1[r:r + m, offs[bid]:offs[bid] + d.shape[1]] += d
                b1[r:r + m] = c.rhs
                r += m
            x1, *_ = np.linalg.lstsq(a1, b1, rcond=None)
            assert np.allclose(x1, x0, atol=1e-8)


def test_eliminate_rejects_foreign_shape():
    _, _, two = circuit_two_block()
    # corrupt a subdivision coupling so the auxiliary no longer matches
    for c in two.couplings:
        if c.origin.get("kind") == "split":
            c.rhs = np.concatenate([c.rhs, [1.0]])
            from admm_forge import LinearMap
            c.map_left = LinearMap.dense(np.vstack([c.map_left.to_dense(),
                                                    np.zeros((1, c.map_left.in_dim))]))
            c.map_right = LinearMap.dense(np.vstack([c.map_right.to_dense(),
                                                     np.zeros((1, c.map_right.in_dim))]))
            break
    with pytest.raises(ValueError):
        eliminate_auxiliaries(two)


def test_json_dump(tmp_path):
    _, _, two = circuit_two_block()
    path = tmp_path / "two.json"
    two.dump(path)
    import json
    obj = json.loads(path.read_text())
    assert len(obj["left_blocks"]) == 2
    assert len(obj["couplings"]) == 4
