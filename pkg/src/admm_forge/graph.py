"""Coupling graph construction and metrics.

Blocks become variable vertices. A constraint over exactly two distinct
blocks becomes a direct edge carrying its maps and rhs; parallel two-block
constraints on the same pair are merged into one edge with vertically
stacked maps. A constraint over p >= 3 blocks is star-expanded: a
constraint vertex holds the concatenated auxiliary y (dim p*m) with a
sum-to-constant prox, and each member i gets an edge encoding
A_i^k x_i - y_i = 0, written as (-S_i) y + A_i^k x_i = 0 with S_i the
selector of the i-th sub-block of y.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .functions import ProxFn, SmoothFn
from .maps import LinearMap
from .problem import MultiblockProblem, validate

__all__ = ["GraphVertex", "GraphEdge", "CouplingGraph", "GraphMetrics",
           "build_coupling_graph", "is_bipartite", "compute_metrics"]


@dataclass
class GraphVertex:
    id: str
    kind: str          # "variable" | "constraint" | "subdivision"
    origin: str        # block id, constraint id, or source edge id
    dim: int
    smooth: SmoothFn = None
    prox: ProxFn = None


@dataclass
class GraphEdge:
    id: str
    u: str
    v: str
    map_u: LinearMap
    map_v: LinearMap
    rhs: np.ndarray
    origin: dict = field(default_factory=dict)

    def __post_init__(self):
        rhs = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
        rhs.flags.writeable = False
        self.rhs = rhs
        if self.u == self.v:
            raise ValueError(f"edge {self.id!r} is a self-loop")
        if self.map_u.out_dim != rhs.shape[0] or self.map_v.out_dim != rhs.shape[0]:
            raise ValueError(f"edge {self.id!r}: map rows do not match rhs length")

    def endpoints(self):
        return (self.u, self.v)

    def map_for(self, vid: str) -> LinearMap:
        if vid == self.u:
            return self.map_u
        if vid == self.v:
            return self.map_v
        raise KeyError(vid)

    def other(self, vid: str) -> str:
        return self.v if vid == self.u else self.u


class CouplingGraph:
    """Simple undirected graph; vertex and edge order is insertion order,
    which doubles as the canonical traversal order."""

    def __init__(self, vertices=(), edges=()):
        self.vertices = []
        self.edges = []
        self._vpos = {}
        self._epos = {}
        self._incident = {}
        for v in vertices:
            self.add_vertex(v)
        for e in edges:
            self.add_edge(e)

    def add_vertex(self, v: GraphVertex) -> None:
        if v.id in self._vpos:
            raise ValueError(f"duplicate vertex id {v.id!r}")
        self._vpos[v.id] = len(self.vertices)
        self.vertices.append(v)
        self._incident[v.id] = []

    def add_edge(self, e: GraphEdge) -> None:
        if e.id in self._epos:
            raise ValueError(f"duplicate edge id {e.id!r}")
        for vid in (e.u, e.v):
            if vid not in self._vpos:
                raise ValueError(f"edge {e.id!r} references unknown vertex {vid!r}")
        self._epos[e.id] = len(self.edges)
        self.edges.append(e)
        self._incident[e.u].append(e)
        self._incident[e.v].append(e)

    def vertex(self, vid: str) -> GraphVertex:
        return self.vertices[self._vpos[vid]]

    def edge(self, eid: str) -> GraphEdge:
        return self.edges[self._epos[eid]]

    def has_vertex(self, vid: str) -> bool:
        return vid in self._vpos

    def vertex_order(self, vid: str) -> int:
        return self._vpos[vid]

    def incident(self, vid: str):
        """Incident edges in canonical order: by neighbor position, then
        edge insertion order."""
        edges = self._incident[vid]
        return sorted(edges, key=lambda e: (self._vpos[e.other(vid)], self._epos[e.id]))

    def degree(self, vid: str) -> int:
        return len(self._incident[vid])

    # ---- serialization ----

    def to_json(self) -> dict:
        verts = []
        for v in self.vertices:
            item = {"id": v.id, "kind": v.kind, "origin": v.origin, "dim": v.dim}
            if v.smooth is not None:
                item["smooth"] = v.smooth.to_json()
            if v.prox is not None:
                item["prox"] = v.prox.to_json()
            verts.append(item)
        edges = [{"id": e.id, "endpoints": [e.u, e.v],
                  "maps": [e.map_u.to_json(), e.map_v.to_json()],
                  "rhs": e.rhs.tolist(), "origin": e.origin}
                 for e in self.edges]
        return {"vertices": verts, "edges": edges}

    @classmethod
    def from_json(cls, obj: dict) -> "CouplingGraph":
        g = cls()
        for v in obj["vertices"]:
            g.add_vertex(GraphVertex(
                str(v["id"]), v["kind"], v.get("origin", ""), int(v["dim"]),
                SmoothFn.from_json(v["smooth"]) if "smooth" in v else None,
                ProxFn.from_json(v["prox"]) if "prox" in v else None))
        for e in obj["edges"]:
            g.add_edge(GraphEdge(
                str(e["id"]), e["endpoints"][0], e["endpoints"][1],
                LinearMap.from_json(e["maps"][0]), LinearMap.from_json(e["maps"][1]),
                e["rhs"], e.get("origin", {})))
        return g

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "CouplingGraph":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_dot(self) -> str:
        shape = {"variable": "ellipse", "constraint": "box", "subdivision": "diamond"}
        lines = ["graph coupling {"]
        for v in self.vertices:
            lines.append(f'  "{v.id}" [shape={shape[v.kind]}];')
        for e in self.edges:
            lines.append(f'  "{e.u}" -- "{e.v}" [label="{e.id}"];')
        lines.append("}")
        return "\n".join(lines)


def _sum_maps(a: LinearMap, b: LinearMap) -> LinearMap:
    if a.out_dim != b.out_dim or a.in_dim != b.in_dim:
        raise ValueError("cannot sum maps of different shapes")
    if a.kind == "dense" and b.kind == "dense":
        return LinearMap.dense(a.to_dense() + b.to_dense())
    s = (a.to_csr() + b.to_csr()).tocoo()
    trips = [(int(i), int(j), float(v)) for i, j, v in zip(s.row, s.col, s.data)]
    return LinearMap.sparse(a.out_dim, a.in_dim, trips)


def _selector(member: int, m: int, arity: int, sign: float = -1.0) -> LinearMap:
    """sign * (selector of sub-block `member`) on a stacked (arity*m,) vector."""
    trips = [(r, member * m + r, sign) for r in range(m)]
    return LinearMap.sparse(m, arity * m, trips)


def build_coupling_graph(problem: MultiblockProblem) -> CouplingGraph:
    errs = validate(problem)
    if errs:
        raise ValueError("invalid problem: " + "; ".join(errs))

    g = CouplingGraph()
    for b in problem.blocks:
        g.add_vertex(GraphVertex(b.id, "variable", b.id, b.dim, b.smooth, b.prox))

    # pair key -> position in g.edges, for merging parallel two-block couplings
    pair_edges = {}

    for c in problem.constraints:
        # canonicalize: a block listed twice in one constraint has its maps summed
        merged = {}
        order = []
        for bid, m in c.terms:
            if bid in merged:
                merged[bid] = _sum_maps(merged[bid], m)
            else:
                merged[bid] = m
                order.append(bid)
        m_rows = c.rhs.shape[0]

        if len(order) == 2:
            i, j = sorted(order, key=problem.block_index)
            key = (i, j)
            if key in pair_edges:
                old = pair_edges[key]
                new = GraphEdge(
                    old.id, i, j,
                    LinearMap.vstack([old.map_u, merged[i]]),
                    LinearMap.vstack([old.map_v, merged[j]]),
                    np.concatenate([old.rhs, c.rhs]),
                    {"kind": "pair", "constraints": old.origin["constraints"] + [c.id]})
                pos = g._epos[old.id]
                g.edges[pos] = new
                for vid in (i, j):
                    inc = g._incident[vid]
                    inc[inc.index(old)] = new
                pair_edges[key] = new
            else:
                e = GraphEdge(f"e:{i}|{j}", i, j, merged[i], merged[j], c.rhs,
                              {"kind": "pair", "constraints": [c.id]})
                g.add_edge(e)
                pair_edges[key] = e
        else:
            arity = len(order)
            cvid = f"con:{c.id}"
            if g.has_vertex(cvid):
                raise ValueError(f"vertex id collision for {cvid!r}")
            g.add_vertex(GraphVertex(
                cvid, "constraint", c.id, arity * m_rows,
                SmoothFn.zero(), ProxFn.sum_to_constant(c.rhs, arity)))
            for t, bid in enumerate(order):
                e = GraphEdge(
                    f"e:{c.id}:{bid}", cvid, bid,
                    _selector(t, m_rows, arity, -1.0), merged[bid],
                    np.zeros(m_rows),
                    {"kind": "star", "constraint": c.id, "member": t,
                     "member_block": bid, "member_dim": m_rows})
                g.add_edge(e)
    return g


def is_bipartite(graph) -> tuple:
    """Deterministic BFS two-coloring attempt.

    Accepts any object with .vertices, .incident(vid) and edge .other().
    Returns (True, {vid: 0/1}) or (False, None).
    """
    color = {}
    for start in graph.vertices:
        if start.id in color:
            continue
        color[start.id] = 0
        queue = deque([start.id])
        while queue:
            u = queue.popleft()
            for e in graph.incident(u):
                w = e.other(u)
                if w not in color:
                    color[w] = 1 - color[u]
                    queue.append(w)
                elif color[w] == color[u]:
                    return (False, None)
    return (True, color)


@dataclass(frozen=True)
class GraphMetrics:
    vertex_count: int
    edge_count: int
    average_degree: float
    balance_score: float  # None when no two-coloring applies

    def to_json(self) -> dict:
        return {"vertex_count": self.vertex_count, "edge_count": self.edge_count,
                "average_degree": self.average_degree,
                "balance_score": self.balance_score}


def compute_metrics(graph, partition: dict = None) -> GraphMetrics:
    """Average degree 2|E|/|V| plus side balance for a two-coloring.

    `partition` maps vertex id -> side in {0, 1}. When omitted, the
    traversal coloring from is_bipartite is used if one exists. A supplied
    partition must cover exactly the vertex set and every edge must cross.
    """
    nv = len(graph.vertices)
    ne = len(graph.edges)
    if nv == 0:
        raise ValueError("metrics of an empty graph")
    if partition is None:
        flag, coloring = is_bipartite(graph)
        partition = coloring if flag else None
    else:
        ids = {v.id for v in graph.vertices}
        if set(partition) != ids:
            raise ValueError("partition does not cover the vertex set exactly")
        for e in graph.edges:
            if partition[e.u] == partition[e.v]:
                raise ValueError(f"partition does not separate edge {e.id!r}")
    balance = None
    if partition is not None:
        left = sum(1 for s in partition.values() if s == 0)
        right = nv - left
        if max(left, right) > 0:
            balance = min(left, right) / max(left, right)
    return GraphMetrics(nv, ne, 2.0 * ne / nv, balance)
