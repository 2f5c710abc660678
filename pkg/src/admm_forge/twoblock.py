"""Two-block assembly of a bipartite coupling graph, and the reverse check.

assemble() orders each side canonically (original blocks in problem order,
then constraint nodes, then subdivision nodes), attaches objectives, and
emits one coupling row group per edge. eliminate_auxiliaries() symbolically
removes subdivision nodes (identity-coupled, degree 2) and constraint-node
y blocks (selector-coupled plus a sum-to-constant prox), yielding a
constraint system over the original blocks for equivalence checks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bipartize import BipartiteGraph
from .functions import ProxFn, SmoothFn
from .maps import LinearMap
from .milp import contribution
from .problem import Constraint

__all__ = ["TwoBlock", "Coupling", "TwoBlockProblem", "assemble", "residual",
           "eliminate_auxiliaries"]

_KIND_RANK = {"variable": 0, "constraint": 1, "subdivision": 2}


@dataclass
class TwoBlock:
    id: str
    dim: int
    smooth: SmoothFn
    prox: ProxFn
    origin: dict = field(default_factory=dict)


@dataclass
class Coupling:
    edge_id: str
    left: int
    right: int
    map_left: LinearMap
    map_right: LinearMap
    rhs: np.ndarray
    origin: dict = field(default_factory=dict)


@dataclass
class TwoBlockProblem:
    left_blocks: list
    right_blocks: list
    couplings: list
    norm_bounds: tuple  # upper bounds on ||A||, ||B||

    def objective(self, xs, zs) -> float:
        total = 0.0
        for blocks, vals in ((self.left_blocks, xs), (self.right_blocks, zs)):
            for b, v in zip(blocks, vals):
                total += b.smooth.value(v) + b.prox.value(v)
        return float(total)

    def to_json(self) -> dict:
        def enc(b):
            return {"id": b.id, "dim": b.dim, "smooth": b.smooth.to_json(),
                    "prox": b.prox.to_json(), "origin": b.origin}
        return {
            "left_blocks": [enc(b) for b in self.left_blocks],
            "right_blocks": [enc(b) for b in self.right_blocks],
            "couplings": [{"edge": c.edge_id, "left": c.left, "right": c.right,
                           "maps": [c.map_left.to_json(), c.map_right.to_json()],
                           "rhs": c.rhs.tolist(), "origin": c.origin}
                          for c in self.couplings],
            "norm_bounds": list(self.norm_bounds),
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


def assemble(bip: BipartiteGraph, side_objectives: dict = None) -> TwoBlockProblem:
    """Build the two-block problem from a materialized bipartite graph.

    `side_objectives` may override per-vertex (smooth, prox) pairs; vertices
    without an override must carry objectives from graph construction.
    """
    side_objectives = side_objectives or {}
    g = bip.graph
    order = sorted(g.vertices, key=lambda v: (_KIND_RANK[v.kind], g.vertex_order(v.id)))

    sides = ([], [])
    index = {}
    for v in order:
        if v.id in side_objectives:
            smooth, prox = side_objectives[v.id]
        else:
            smooth, prox = v.smooth, v.prox
        if smooth is None or prox is None:
            raise ValueError(f"vertex {v.id!r} has no objective parts")
        s = bip.side[v.id]
        index[v.id] = len(sides[s])
        sides[s].append(TwoBlock(v.id, v.dim, smooth, prox,
                                 {"kind": v.kind, "ref": v.origin}))
    left, right = sides

    couplings = []
    for e in g.edges:
        if bip.side[e.u] == 0:
            lv, rv, ml, mr = e.u, e.v, e.map_u, e.map_v
        else:
            lv, rv, ml, mr = e.v, e.u, e.map_v, e.map_u
        couplings.append(Coupling(e.id, index[lv], index[rv], ml, mr,
                                  np.array(e.rhs), dict(e.origin)))

    norm_a = max((contribution(g, b.id, "frobenius") for b in left), default=0.0)
    norm_b = max((contribution(g, b.id, "frobenius") for b in right), default=0.0)
    return TwoBlockProblem(left, right, couplings, (norm_a, norm_b))


def residual(problem: TwoBlockProblem, xs, zs) -> list:
    """Per-coupling residuals A_e x + B_e z - b_e."""
    out = []
    for c in problem.couplings:
        out.append(c.map_left.apply(xs[c.left]) + c.map_right.apply(zs[c.right])
                   - c.rhs)
    return out


def _is_scaled_identity(m: LinearMap):
    """Return the scale if the map acts as s*I, else None."""
    if m.kind == "identity":
        return 1.0
    if m.kind == "scaled_identity":
        return m.scale
    if m.out_dim != m.in_dim:
        return None
    d = m.to_dense()
    s = d[0, 0]
    if np.array_equal(d, s * np.eye(m.out_dim)):
        return float(s)
    return None


def _selector_member(m: LinearMap, sub_dim: int):
    """Return t if the map is -(selector of sub-block t), else None."""
    d = m.to_dense()
    if d.shape[0] != sub_dim:
        return None
    nz = np.nonzero(d)
    if len(nz[0]) != sub_dim:
        return None
    cols = nz[1]
    t, rem = divmod(int(cols[0]), sub_dim)
    if rem != 0:
        return None
    expect = np.zeros_like(d)
    expect[np.arange(sub_dim), t * sub_dim + np.arange(sub_dim)] = -1.0
    if not np.array_equal(d, expect):
        return None
    return t


def eliminate_auxiliaries(problem: TwoBlockProblem) -> list:
    """Reduce the coupling system to constraints over original blocks.

    Returns a list of Constraint objects. Raises if an auxiliary block is
    not in the shape assemble/materialize produce.
    """
    blocks = {}
    for b in problem.left_blocks + problem.right_blocks:
        blocks[b.id] = b

    # working rows: ({block_id: dense map}, rhs)
    rows = []
    lids = [b.id for b in problem.left_blocks]
    rids = [b.id for b in problem.right_blocks]
    for c in problem.couplings:
        terms = {lids[c.left]: c.map_left.to_dense(),
                 rids[c.right]: c.map_right.to_dense()}
        rows.append((terms, np.array(c.rhs)))

    def merge_into(dst, src, factor):
        for bid, m in src.items():
            if bid in dst:
                dst[bid] = dst[bid] + factor * m
            else:
                dst[bid] = factor * m

    # stage 1: subdivision nodes, coupled by +/- identity in exactly two rows
    for bid, b in blocks.items():
        if b.origin.get("kind") != "subdivision":
            continue
        hits = [r for r in rows if bid in r[0]]
        if len(hits) != 2:
            raise ValueError(f"subdivision block {bid!r} appears in "
                             f"{len(hits)} rows, expected 2")
        scales = []
        for terms, _ in hits:
            s = _is_scaled_identity(LinearMap.dense(terms[bid]))
            if s is None or abs(abs(s) - 1.0) > 0:
                raise ValueError(f"subdivision block {bid!r} is not "
                                 "identity-coupled")
            scales.append(s)
        (ta, ra), (tb, rb) = hits
        ca, cb = scales
        # solve w from row a, substitute into row b
        factor = -cb / ca
        combined = {k: np.array(v) for k, v in tb.items() if k != bid}
        merge_into(combined, {k: v for k, v in ta.items() if k != bid}, factor)
        new_rhs = rb + factor * ra
        drop = {id(hits[0]), id(hits[1])}
        rows = [r for r in rows if id(r) not in drop]
        rows.append((combined, new_rhs))

    # stage 2: constraint-node y blocks, selector-coupled plus sum prox
    for bid, b in blocks.items():
        if b.origin.get("kind") != "constraint":
            continue
        if b.prox.kind != "sum_to_constant":
            raise ValueError(f"constraint block {bid!r} lacks a "
                             "sum_to_constant prox")
        m = b.prox.target.shape[0]
        arity = b.prox.arity
        hits = [r for r in rows if bid in r[0]]
        seen = set()
        combined = {}
        rhs_shift = np.zeros(m)
        for terms, r in hits:
            t = _selector_member(LinearMap.dense(terms[bid]), m)
            if t is None:
                raise ValueError(f"constraint block {bid!r} has a non-selector "
                                 "coupling")
            if t in seen:
                raise ValueError(f"constraint block {bid!r}: member {t} "
                                 "appears twice")
            seen.add(t)
            # row: -y_t + sum(other) = r  =>  y_t = sum(other) - r
            merge_into(combined, {k: v for k, v in terms.items() if k != bid}, 1.0)
            rhs_shift += r
        if seen != set(range(arity)):
            raise ValueError(f"constraint block {bid!r}: members {sorted(seen)} "
                             f"do not cover arity {arity}")
        rows = [r for r in rows if bid not in r[0]]
        rows.append((combined, b.prox.target + rhs_shift))

    out = []
    for k, (terms, r) in enumerate(rows):
        for bid in terms:
            if blocks[bid].origin.get("kind") != "variable":
                raise ValueError(f"auxiliary block {bid!r} survived elimination")
        out.append(Constraint(
            f"reduced_{k}",
            tuple((bid, LinearMap.dense(m)) for bid, m in terms.items()),
            r))
    return out
