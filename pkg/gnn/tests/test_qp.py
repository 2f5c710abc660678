import numpy as np
import pytest

from bipart_gnn import (
    anchor_vertex,
    canonical_labels,
    featurize_problem,
    gen_dataset,
    gen_problem,
    label_problem,
    map_to_dense,
)


def stacked_system(problem):
    offsets = {}
    total = 0
    for blk in problem["blocks"]:
        offsets[blk["id"]] = total
        total += blk["dim"]
    rows = sum(len(con["rhs"]) for con in problem["constraints"])
    a = np.zeros((rows, total))
    b = np.zeros(rows)
    r = 0
    for con in problem["constraints"]:
        m = len(con["rhs"])
        for term in con["terms"]:
            mat = map_to_dense(term["map"])
            off = offsets[term["block"]]
            a[r : r + m, off : off + mat.shape[1]] += mat
        b[r : r + m] = con["rhs"]
        r += m
    return a, b


def test_generated_problems_are_feasible():
    rng = np.random.default_rng(17)
    for _ in range(5):
        problem = gen_problem(rng, 10)
        a, b = stacked_system(problem)
        x = np.linalg.lstsq(a, b, rcond=None)[0]
        assert np.linalg.norm(a @ x - b) <= 1e-8 * (1.0 + np.linalg.norm(b))


def test_generated_problems_have_connected_near_tree_topology():
    rng = np.random.default_rng(23)
    problem = gen_problem(rng, 12)
    assert len(problem["blocks"]) == 12
    assert {blk["id"] for blk in problem["blocks"]} == {f"x{i}" for i in range(12)}
    n_edges = len(problem["constraints"])
    assert n_edges in (11, 12)
    for blk in problem["blocks"]:
        assert 2 <= blk["dim"] <= 5
        p = np.asarray(blk["smooth"]["p"])
        assert np.allclose(p, p.T)
        assert np.all(np.linalg.eigvalsh(p) >= -1e-9)
    for con in problem["constraints"]:
        assert len(con["terms"]) == 2
        assert 2 <= len(con["rhs"]) <= 5


def test_gen_problem_rejects_tiny_instances():
    with pytest.raises(ValueError, match="at least two blocks"):
        gen_problem(np.random.default_rng(0), 1)


def test_identical_seed_gives_identical_dataset(tmp_path):
    first = gen_dataset(3, nodes_per_graph=8, seed=5, workdir=tmp_path / "a")
    second = gen_dataset(3, nodes_per_graph=8, seed=5, workdir=tmp_path / "b")
    assert len(first) == len(second) == 3
    for x, y in zip(first, second):
        assert x.vertex_ids == y.vertex_ids
        assert np.array_equal(x.node_feats, y.node_feats)
        assert np.array_equal(x.edge_index, y.edge_index)
        assert np.array_equal(x.edge_feats, y.edge_feats)
        assert np.array_equal(x.labels, y.labels)


def test_dataset_labels_are_binary_and_anchored(tmp_path):
    instances = gen_dataset(2, nodes_per_graph=8, seed=9, workdir=tmp_path)
    for inst in instances:
        assert inst.labels is not None
        assert inst.labels.shape == (len(inst.vertex_ids),)
        assert set(np.unique(inst.labels)) <= {0.0, 1.0}
        anchor = anchor_vertex(
            inst.edge_index, inst.edge_feats, len(inst.vertex_ids)
        )
        assert inst.labels[anchor] == 0.0


def test_canonical_labels_flip_when_anchor_is_on_side_one():
    rng = np.random.default_rng(3)
    inst = featurize_problem(gen_problem(rng, 6))
    anchor = anchor_vertex(inst.edge_index, inst.edge_feats, len(inst.vertex_ids))
    coloring = {vid: 0 for vid in inst.vertex_ids}
    coloring[inst.vertex_ids[anchor]] = 1
    labels = canonical_labels(inst, coloring)
    assert labels[anchor] == 0.0
    others = [k for k in range(len(inst.vertex_ids)) if k != anchor]
    assert all(labels[k] == 1.0 for k in others)

    same = canonical_labels(inst, {vid: 0 for vid in inst.vertex_ids})
    assert np.all(same == 0.0)


def test_missing_partitioner_tool_raises(tmp_path):
    with pytest.raises(RuntimeError, match="not available"):
        gen_dataset(
            1, nodes_per_graph=5, seed=0, workdir=tmp_path, cli="no-such-tool-zzz"
        )


def test_failing_partitioner_run_raises(tmp_path):
    with pytest.raises(RuntimeError, match="failed with code"):
        label_problem(tmp_path / "missing.json", tmp_path / "out")
