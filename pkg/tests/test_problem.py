import numpy as np
import pytest

from admm_forge import (Block, Constraint, LinearMap, MultiblockProblem,
                        ProxFn, SmoothFn, validate)
from admm_forge.problem import eval_objective


def base_blocks():
    return [
        Block("x", 2, SmoothFn.quadratic(np.eye(2)), ProxFn.zero()),
        Block("y", 1, SmoothFn.linear([1.0]), ProxFn.box([0.0], [1.0])),
    ]


def base_constraint():
    return Constraint("c0",
                      (("x", LinearMap.dense(np.array([[1.0, 1.0]]))),
                       ("y", LinearMap.scaled_identity(1, -1.0))),
                      [0.5])


def two_block_problem():
    return MultiblockProblem(base_blocks(), [base_constraint()])


def test_block_requires_positive_dim():
    with pytest.raises(ValueError):
        Block("x", 0, SmoothFn.zero(), ProxFn.zero())


def test_valid_problem_passes():
    assert validate(two_block_problem()) == []


def test_validate_duplicate_block_id():
    p = MultiblockProblem(
        base_blocks() + [Block("x", 1, SmoothFn.zero(), ProxFn.zero())],
        [base_constraint()])
    assert any("duplicate block id" in e for e in validate(p))


def test_validate_unknown_block_in_constraint():
    bad = Constraint("c1", (("x", LinearMap.dense(np.ones((1, 2)))),
                            ("ghost", LinearMap.identity(1))), [0.0])
    p = MultiblockProblem(base_blocks(), [base_constraint(), bad])
    assert any("unknown block" in e for e in validate(p))


def test_validate_map_in_dim_mismatch():
    bad = Constraint("c1", (("x", LinearMap.identity(3)),
                            ("y", LinearMap.dense(np.ones((3, 1))))),
                     np.zeros(3))
    p = MultiblockProblem(base_blocks(), [base_constraint(), bad])
    assert any("in_dim" in e for e in validate(p))


def test_validate_rhs_length_mismatch():
    bad = Constraint("c1", (("x", LinearMap.dense(np.ones((2, 2)))),
                            ("y", LinearMap.dense(np.ones((2, 1))))), [0.0])
    p = MultiblockProblem(base_blocks(), [base_constraint(), bad])
    assert any("rhs length" in e for e in validate(p))


def test_validate_single_block_constraint():
    bad = Constraint("c1", (("x", LinearMap.dense(np.ones((1, 2)))),), [0.0])
    p = MultiblockProblem(base_blocks(), [base_constraint(), bad])
    assert any("fewer than two" in e for e in validate(p))


def test_validate_duplicate_constraint_id():
    p = MultiblockProblem(base_blocks(),
                          [base_constraint(), base_constraint()])
    assert any("duplicate constraint id" in e for e in validate(p))


def test_validate_nonfinite_rhs():
    bad = Constraint("c1", (("x", LinearMap.dense(np.ones((1, 2)))),
                            ("y", LinearMap.identity(1))), [np.nan])
    p = MultiblockProblem(base_blocks(), [base_constraint(), bad])
    assert any("non-finite" in e for e in validate(p))


def test_smooth_dim_mismatch_is_caught():
    p = MultiblockProblem(
        [Block("x", 3, SmoothFn.quadratic(np.eye(2)), ProxFn.zero()),
         Block("y", 1, SmoothFn.zero(), ProxFn.zero())],
        [Constraint("c",
                    (("x", LinearMap.dense(np.ones((1, 3)))),
                     ("y", LinearMap.identity(1))), [0.0])])
    assert any("smooth dimension" in e for e in validate(p))


def test_prox_dim_mismatch_is_caught():
    p = MultiblockProblem(
        [Block("x", 3, SmoothFn.zero(), ProxFn.box([0.0], [1.0])),
         Block("y", 1, SmoothFn.zero(), ProxFn.zero())],
        [Constraint("c",
                    (("x", LinearMap.dense(np.ones((1, 3)))),
                     ("y", LinearMap.identity(1))), [0.0])])
    assert any("prox dimension" in e for e in validate(p))


def test_constraint_block_ids_deduplicates():
    c = Constraint("c", (("x", LinearMap.identity(1)),
                         ("x", LinearMap.scaled_identity(1, 2.0)),
                         ("y", LinearMap.identity(1))), [0.0])
    assert c.block_ids() == ["x", "y"]


def test_block_lookup():
    p = two_block_problem()
    assert p.block("y").dim == 1
    assert p.block_index("x") == 0
    with pytest.raises(KeyError):
        p.block("missing")


def test_eval_objective():
    p = two_block_problem()
    xs = {"x": np.array([1.0, 2.0]), "y": np.array([0.5])}
    expect = 0.5 * (1.0 + 4.0) + 0.5
    assert eval_objective(p, xs) == pytest.approx(expect)
    xs["y"] = np.array([2.0])      # outside the box
    assert eval_objective(p, xs) == np.inf


def test_json_round_trip_preserves_solutions():
    rng = np.random.default_rng(0)
    p = two_block_problem()
    q = MultiblockProblem.from_json(p.to_json())
    assert validate(q) == []
    assert [b.id for b in q.blocks] == ["x", "y"]
    xs = {"x": rng.standard_normal(2), "y": np.array([0.7])}
    assert eval_objective(q, xs) == pytest.approx(eval_objective(p, xs))
    c0, c1 = p.constraints[0], q.constraints[0]
    assert c1.id == c0.id
    assert np.array_equal(c1.rhs, c0.rhs)
    for (bid0, m0), (bid1, m1) in zip(c0.terms, c1.terms):
        assert bid0 == bid1
        assert np.allclose(m0.to_dense(), m1.to_dense())


def test_dump_load(tmp_path):
    p = two_block_problem()
    path = tmp_path / "problem.json"
    p.dump(path)
    q = MultiblockProblem.load(path)
    assert validate(q) == []
    assert len(q.constraints) == 1


def test_malformed_json_raises():
    with pytest.raises(ValueError):
        MultiblockProblem.from_json({"blocks": [{"id": "x"}]})
