"""Bipartization decisions and their materialization.

A decision is a vertex two-coloring c plus per-edge (split, side) pairs.
Unsplit edges must join differently colored endpoints. A split edge (u, v)
with maps (Q_u, Q_v) and right-hand side b is subdivided through a fresh
node w of dimension len(b):

    Q_u x_u - w = 0        (leg a)
    Q_v x_v + w = b        (leg b)

which sums back to the original coupling. w carries zero objectives and has
degree exactly 2. A valid split requires c(u) == c(v), and w must land on
the opposite side; the materialized graph is checked to be bipartite.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .functions import ProxFn, SmoothFn
from .graph import CouplingGraph, GraphEdge, GraphVertex, compute_metrics, is_bipartite
from .maps import LinearMap

__all__ = ["BipartizationDecision", "BipartiteGraph", "bfs_bipartize",
           "import_decision", "basic_decision", "materialize",
           "read_assignment", "write_assignment"]


class NonBipartiteError(ValueError):
    pass


@dataclass
class BipartizationDecision:
    coloring: dict        # vertex id -> 0/1
    edge_decisions: dict  # edge id -> (split, side)

    def split_count(self) -> int:
        return sum(1 for s, _ in self.edge_decisions.values() if s == 1)

    def to_json(self) -> dict:
        return {"coloring": {k: int(v) for k, v in self.coloring.items()},
                "edge_decisions": {k: [int(a), int(b)]
                                   for k, (a, b) in self.edge_decisions.items()}}

    @classmethod
    def from_json(cls, obj: dict) -> "BipartizationDecision":
        col = {str(k): int(v) for k, v in obj["coloring"].items()}
        eds = {str(k): (int(v[0]), int(v[1]))
               for k, v in obj["edge_decisions"].items()}
        return cls(col, eds)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "BipartizationDecision":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _check_decision(graph: CouplingGraph, dec: BipartizationDecision) -> None:
    vids = {v.id for v in graph.vertices}
    if set(dec.coloring) != vids:
        missing = vids - set(dec.coloring)
        extra = set(dec.coloring) - vids
        raise ValueError(f"coloring mismatch (missing {sorted(missing)}, "
                         f"unknown {sorted(extra)})")
    for vid, c in dec.coloring.items():
        if c not in (0, 1):
            raise ValueError(f"vertex {vid!r}: color must be 0 or 1, got {c!r}")
    eids = {e.id for e in graph.edges}
    if set(dec.edge_decisions) != eids:
        raise ValueError("edge decisions do not cover the edge set exactly")
    for eid, (s, side) in dec.edge_decisions.items():
        if s not in (0, 1) or side not in (0, 1):
            raise ValueError(f"edge {eid!r}: split and side must be 0 or 1")


def bfs_bipartize(graph: CouplingGraph, traversal: str = "bfs") -> BipartizationDecision:
    """Single-pass traversal coloring with on-the-fly conflict splitting.

    Vertices are visited in canonical order; each new component starts with
    the alternating color s. When an edge closes against an equally colored
    vertex and is still undecided, it is marked split with the new node on
    the opposite side. The dfs variant pops from the stack end, with
    identical conflict handling.
    """
    if traversal not in ("bfs", "dfs"):
        raise ValueError("traversal must be 'bfs' or 'dfs'")
    color = {v.id: -1 for v in graph.vertices}
    sigma = {e.id: (0, 0) for e in graph.edges}
    s = 0
    for start in graph.vertices:
        if color[start.id] != -1:
            continue
        color[start.id] = s
        queue = [start.id]
        while queue:
            u = queue.pop(0) if traversal == "bfs" else queue.pop()
            p = color[u]
            for e in graph.incident(u):
                w = e.other(u)
                if color[w] == -1:
                    color[w] = 1 - p
                    queue.append(w)
                elif color[w] == p and sigma[e.id] == (0, 0):
                    sigma[e.id] = (1, 1 - p)
        s = 1 - s
    return BipartizationDecision(color, sigma)


def import_decision(graph: CouplingGraph, coloring: dict) -> BipartizationDecision:
    """Derive edge decisions from an externally supplied coloring.

    Differently colored endpoints keep the edge; equally colored endpoints
    force a split with the new node on the opposite side (the only placement
    whose materialization stays bipartite).
    """
    vids = {v.id for v in graph.vertices}
    if set(coloring) != vids:
        missing = sorted(vids - set(coloring))
        extra = sorted(set(coloring) - vids)
        raise ValueError(f"coloring mismatch (missing {missing}, unknown {extra})")
    col = {}
    for vid, c in coloring.items():
        c = int(c)
        if c not in (0, 1):
            raise ValueError(f"vertex {vid!r}: color must be 0 or 1")
        col[vid] = c
    sigma = {}
    for e in graph.edges:
        if col[e.u] != col[e.v]:
            sigma[e.id] = (0, 0)
        else:
            sigma[e.id] = (1, 1 - col[e.u])
    return BipartizationDecision(col, sigma)


def basic_decision(graph: CouplingGraph) -> BipartizationDecision:
    """Trivial bipartization: color everything 0 and subdivide every edge."""
    return import_decision(graph, {v.id: 0 for v in graph.vertices})


class BipartiteGraph:
    """Materialized two-sided graph: a CouplingGraph plus the side map."""

    def __init__(self, graph: CouplingGraph, side: dict, source_decision=None):
        self.graph = graph
        self.side = dict(side)
        self.source_decision = source_decision
        for e in graph.edges:
            if self.side[e.u] == self.side[e.v]:
                raise NonBipartiteError(f"edge {e.id!r} does not cross the partition")
        flag, _ = is_bipartite(graph)
        if not flag:
            raise NonBipartiteError("materialized graph is not bipartite")

    @property
    def left_ids(self):
        return [v.id for v in self.graph.vertices if self.side[v.id] == 0]

    @property
    def right_ids(self):
        return [v.id for v in self.graph.vertices if self.side[v.id] == 1]

    @property
    def subdivision_ids(self):
        return [v.id for v in self.graph.vertices if v.kind == "subdivision"]

    def metrics(self):
        return compute_metrics(self.graph, self.side)

    def to_json(self) -> dict:
        obj = self.graph.to_json()
        obj["side"] = {k: int(v) for k, v in self.side.items()}
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "BipartiteGraph":
        g = CouplingGraph.from_json(obj)
        return cls(g, {str(k): int(v) for k, v in obj["side"].items()})

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "BipartiteGraph":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_dot(self) -> str:
        shape = {"variable": "ellipse", "constraint": "box", "subdivision": "diamond"}
        lines = ["graph bipartite {", "  rankdir=LR;"]
        for name, side in (("L", 0), ("R", 1)):
            lines.append(f"  subgraph cluster_{name} {{")
            lines.append(f'    label="{name}";')
            for v in self.graph.vertices:
                if self.side[v.id] == side:
                    lines.append(f'    "{v.id}" [shape={shape[v.kind]}];')
            lines.append("  }")
        for e in self.graph.edges:
            lines.append(f'  "{e.u}" -- "{e.v}" [label="{e.id}"];')
        lines.append("}")
        return "\n".join(lines)


def materialize(graph: CouplingGraph, decision: BipartizationDecision) -> BipartiteGraph:
    """Apply a decision: keep crossing edges, subdivide split edges."""
    _check_decision(graph, decision)
    out = CouplingGraph()
    for v in graph.vertices:
        out.add_vertex(GraphVertex(v.id, v.kind, v.origin, v.dim, v.smooth, v.prox))
    side = {v.id: decision.coloring[v.id] for v in graph.vertices}

    def oriented(eid, a, b, map_a, map_b, rhs, origin):
        # store left endpoint first
        if side[a] == 0:
            return GraphEdge(eid, a, b, map_a, map_b, rhs, origin)
        return GraphEdge(eid, b, a, map_b, map_a, rhs, origin)

    for e in graph.edges:
        split, wside = decision.edge_decisions[e.id]
        if split == 0:
            if side[e.u] == side[e.v]:
                raise NonBipartiteError(
                    f"edge {e.id!r} kept unsplit between equally colored endpoints")
            out.add_edge(oriented(e.id, e.u, e.v, e.map_u, e.map_v, e.rhs, e.origin))
        else:
            m = e.rhs.shape[0]
            wid = f"w:{e.id}"
            out.add_vertex(GraphVertex(wid, "subdivision", e.id, m,
                                       SmoothFn.zero(), ProxFn.zero()))
            side[wid] = wside
            neg_id = LinearMap.scaled_identity(m, -1.0)
            pos_id = LinearMap.identity(m)
            origin_a = {"kind": "split", "edge": e.id, "leg": "a", "parent": e.origin}
            origin_b = {"kind": "split", "edge": e.id, "leg": "b", "parent": e.origin}
            out.add_edge(oriented(f"{e.id}:a", e.u, wid, e.map_u, neg_id,
                                  np.zeros(m), origin_a))
            out.add_edge(oriented(f"{e.id}:b", e.v, wid, e.map_v, pos_id,
                                  np.array(e.rhs), origin_b))
    return BipartiteGraph(out, side, source_decision=decision)


# ---- assignment files: one "vertex_id<TAB>color" per line, '#' comments ----

def read_assignment(path) -> dict:
    out = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{ln}: expected 'vertex_id<TAB>color'")
            vid, col = parts
            if col not in ("0", "1"):
                raise ValueError(f"{path}:{ln}: color must be 0 or 1, got {col!r}")
            if vid in out:
                raise ValueError(f"{path}:{ln}: duplicate vertex {vid!r}")
            out[vid] = int(col)
    return out


def write_assignment(path, coloring: dict) -> None:
    with open(path, "w") as fh:
        fh.write("# vertex_id<TAB>color\n")
        for vid, c in coloring.items():
            fh.write(f"{vid}\t{int(c)}\n")
