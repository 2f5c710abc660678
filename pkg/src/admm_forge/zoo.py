"""Instance generators for the benchmark families.

All generators are deterministic functions of their parameters and seed.
Families:
  gen_circuit      three-resistor current network, quadratic dissipation
  gen_network_flow random feasible min-cost flow on a connected digraph
  gen_consensus_ls decentralized consensus least squares, in two encodings
  lp_cocluster     block LP extracted from a sparse matrix by co-clustering
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .functions import EQ_TOL, ProxFn, SmoothFn
from .maps import LinearMap
from .problem import Block, Constraint, MultiblockProblem

__all__ = ["gen_circuit", "gen_network_flow", "gen_consensus_ls",
           "cocluster", "lp_cocluster"]


def gen_circuit(resistances, sources) -> MultiblockProblem:
    """Three branch currents I1..I3, objective sum R_i I_i^2, nodal
    current balances I1-I3=J1, I2-I1=J2, I3-I2=J3. The coupling graph
    is a triangle. Requires sum(J) == 0."""
    r = np.asarray(resistances, dtype=float)
    j = np.asarray(sources, dtype=float)
    if r.shape != (3,) or j.shape != (3,):
        raise ValueError("expected 3 resistances and 3 current sources")
    if np.any(r <= 0.0):
        raise ValueError("resistances must be positive")
    if abs(float(j.sum())) > EQ_TOL:
        raise ValueError("current sources must sum to zero (infeasible network)")
    blocks = [Block(f"I{i + 1}", 1, SmoothFn.quadratic([[2.0 * r[i]]]),
                    ProxFn.zero()) for i in range(3)]
    plus = LinearMap.identity(1)
    minus = LinearMap.scaled_identity(1, -1.0)
    cons = [
        Constraint("kcl1", (("I1", plus), ("I3", minus)), [j[0]]),
        Constraint("kcl2", (("I2", plus), ("I1", minus)), [j[1]]),
        Constraint("kcl3", (("I3", plus), ("I2", minus)), [j[2]]),
    ]
    return MultiblockProblem(blocks, cons)


def gen_network_flow(node_count: int, arc_count: int, seed: int,
                     cost_range=(0.0, 10.0), capacity_range=(0.0, 40.0),
                     degree2_fraction: float = 0.3,
                     supply_bound: float = 100.0):
    """Random feasible min-cost network flow.

    Topology: one cycle through all nodes, then extra undirected edges
    sampled uniformly, keeping roughly degree2_fraction of the nodes at
    degree two when enough other node pairs remain; requests beyond the
    simple-graph capacity are met with parallel arcs. Each edge gets a
    random orientation. Feasibility by construction: a random flow within
    capacities defines the supplies as its net outflow; if that flow is
    scaled down to respect supply_bound, supplies are recomputed from the
    scaled flow.

    Returns (problem, info); info carries the arc list and the witness
    flow, which satisfies every balance row exactly.
    """
    n, m = int(node_count), int(arc_count)
    if n < 3:
        raise ValueError("need at least 3 nodes")
    if m < n:
        raise ValueError("arc_count must be at least node_count (cycle backbone)")
    rng = np.random.default_rng(seed)

    perm = rng.permutation(n)
    edges = set()
    for i in range(n):
        u, v = int(perm[i]), int(perm[(i + 1) % n])
        edges.add((min(u, v), max(u, v)))
    protected = set(rng.choice(n, size=int(round(degree2_fraction * n)),
                               replace=False).tolist())
    free = [w for w in range(n) if w not in protected]
    pool = [(u, v) for i, u in enumerate(free) for v in free[i + 1:]
            if (u, v) not in edges]
    need = m - len(edges)
    if need > len(pool):
        # not enough unprotected pairs; fall back to the full complement
        pool = [(u, v) for u in range(n) for v in range(u + 1, n)
                if (u, v) not in edges]
    rng.shuffle(pool)
    for e in pool[:need]:
        edges.add(e)

    pairs = sorted(edges)
    extra = m - len(pairs)
    if extra > 0:
        # dense request: duplicate random pairs as parallel arcs
        for i in rng.integers(0, len(pairs), size=extra):
            pairs.append(pairs[int(i)])
    arcs = []
    for u, v in pairs:
        arcs.append((u, v) if rng.random() < 0.5 else (v, u))
    costs = rng.uniform(cost_range[0], cost_range[1], size=m)
    caps = rng.uniform(capacity_range[0], capacity_range[1], size=m)
    flow = rng.uniform(0.0, caps)

    supply = np.zeros(n)
    for a, (u, v) in enumerate(arcs):
        supply[u] += flow[a]
        supply[v] -= flow[a]
    peak = np.abs(supply).max()
    if peak > supply_bound:
        flow = flow * (supply_bound / peak)
        # recompute rather than scale: keeps the witness residual exactly 0
        supply = np.zeros(n)
        for a, (u, v) in enumerate(arcs):
            supply[u] += flow[a]
            supply[v] -= flow[a]

    blocks, incident = [], {i: [] for i in range(n)}
    for a, (u, v) in enumerate(arcs):
        bid = f"f{a}"
        blocks.append(Block(bid, 1, SmoothFn.linear([costs[a]]),
                            ProxFn.box([0.0], [caps[a]])))
        incident[u].append((bid, 1.0))
        incident[v].append((bid, -1.0))
    cons = [Constraint(f"node{i}",
                       tuple((bid, LinearMap.scaled_identity(1, s))
                             for bid, s in incident[i]),
                       [supply[i]])
            for i in range(n)]
    info = {
        "arcs": arcs,
        "costs": costs,
        "capacities": caps,
        "supplies": supply,
        "witness_flow": {f"f{a}": np.array([flow[a]]) for a in range(m)},
    }
    return MultiblockProblem(blocks, cons), info


def gen_consensus_ls(agent_count: int, seed: int, dim: int = 50,
                     rows: int = 25, noise_std: float = 0.1,
                     p_range=None):
    """Consensus least squares over a random connected network.

    Connectivity ratio p is drawn from p_range (default [2/|V|, 10/|V|])
    and sets |E| = p|V|(|V|-1)/2, floored at a spanning tree. Agent i
    holds ||Q_i x - q_i||^2 with q_i = Q_i xbar + noise.

    Returns (edges, standard_problem, direct_problem): the direct form has
    one x_i - x_j = 0 constraint per edge, so its coupling graph is the
    communication graph itself; the standard form pre-splits every edge
    with an auxiliary block (x_i = z_e, x_j = z_e).
    """
    n = int(agent_count)
    if n < 2:
        raise ValueError("need at least 2 agents")
    rng = np.random.default_rng(seed)
    if p_range is None:
        p_range = (2.0 / n, 10.0 / n)
    p = min(rng.uniform(p_range[0], p_range[1]), 1.0)
    target_edges = int(round(p * n * (n - 1) / 2.0))
    target_edges = max(target_edges, n - 1)
    target_edges = min(target_edges, n * (n - 1) // 2)

    edges = []
    seen = set()
    for i in range(1, n):
        parent = int(rng.integers(0, i))
        edges.append((parent, i))
        seen.add((parent, i))
    pool = [(u, v) for u in range(n) for v in range(u + 1, n)
            if (u, v) not in seen]
    rng.shuffle(pool)
    edges.extend(pool[:target_edges - len(edges)])
    edges.sort()

    xbar = rng.standard_normal(dim)
    agent_blocks = []
    for i in range(n):
        q_mat = rng.standard_normal((rows, dim))
        q_vec = q_mat @ xbar + rng.normal(0.0, noise_std, size=rows)
        agent_blocks.append(Block(f"x{i}", dim,
                                  SmoothFn.least_squares(q_mat, q_vec),
                                  ProxFn.zero()))

    ident = LinearMap.identity(dim)
    neg = LinearMap.scaled_identity(dim, -1.0)
    zero_rhs = np.zeros(dim)

    direct = MultiblockProblem(
        agent_blocks,
        [Constraint(f"c{u}_{v}", ((f"x{u}", ident), (f"x{v}", neg)), zero_rhs)
         for u, v in edges])

    std_blocks = list(agent_blocks)
    std_cons = []
    for u, v in edges:
        zid = f"z{u}_{v}"
        std_blocks.append(Block(zid, dim, SmoothFn.zero(), ProxFn.zero()))
        std_cons.append(Constraint(f"c{u}_{v}a",
                                   ((f"x{u}", ident), (zid, neg)), zero_rhs))
        std_cons.append(Constraint(f"c{u}_{v}b",
                                   ((f"x{v}", ident), (zid, neg)), zero_rhs))
    standard = MultiblockProblem(std_blocks, std_cons)
    return edges, standard, direct


def cocluster(a, k: int, passes: int):
    """Alternating row/column co-clustering of a sparse matrix.

    Columns start cyclically over the k clusters, rows in cluster 0. Each
    pass reassigns every row to the cluster most represented among its
    nonzero columns' clusters, then every column symmetrically; ties break
    toward the smaller cluster index. Returns (row_clusters, col_clusters)
    as integer arrays.
    """
    mat = sp.csr_matrix(a)
    m, n = mat.shape
    if m == 0 or n == 0:
        raise ValueError("empty matrix")
    if k < 1:
        raise ValueError("k must be at least 1")
    if passes < 1:
        raise ValueError("passes must be at least 1")
    col_of = np.arange(n) % k
    row_of = np.zeros(m, dtype=int)
    csc = mat.tocsc()
    for _ in range(passes):
        for i in range(m):
            cols = mat.indices[mat.indptr[i]:mat.indptr[i + 1]]
            if cols.size:
                row_of[i] = np.bincount(col_of[cols], minlength=k).argmax()
        for j in range(n):
            rws = csc.indices[csc.indptr[j]:csc.indptr[j + 1]]
            if rws.size:
                col_of[j] = np.bincount(row_of[rws], minlength=k).argmax()
    return row_of, col_of


def lp_cocluster(a, c, l, u, b_lo, b_hi, k: int, passes: int):
    """Multiblock form of the LP  min c'x, b_lo <= Ax <= b_hi, l <= x <= u.

    Column clusters become blocks (Linear cost, box bounds); row clusters
    become block constraints. A row group takes a slack block bounded by
    [b_lo, b_hi] when it contains any inequality row, or when it would
    otherwise couple fewer than two blocks; pure-equality groups with two
    or more blocks keep their right-hand side directly.

    Returns (problem, info) with the cluster assignments in info.
    """
    mat = sp.csr_matrix(a)
    m, n = mat.shape
    c = np.asarray(c, dtype=float)
    l = np.asarray(l, dtype=float)
    u = np.asarray(u, dtype=float)
    b_lo = np.asarray(b_lo, dtype=float)
    b_hi = np.asarray(b_hi, dtype=float)
    row_of, col_of = cocluster(mat, k, passes)

    blocks = []
    col_members = {}
    for t in range(k):
        cols = np.flatnonzero(col_of == t)
        if cols.size == 0:
            continue
        col_members[t] = cols
        blocks.append(Block(f"xc{t}", int(cols.size),
                            SmoothFn.linear(c[cols]),
                            ProxFn.box(l[cols], u[cols])))

    cons = []
    for t in range(k):
        rws = np.flatnonzero(row_of == t)
        if rws.size == 0:
            continue
        sub = mat[rws, :]
        terms = []
        for bt, cols in col_members.items():
            piece = sub[:, cols].tocoo()
            if piece.nnz == 0:
                continue
            terms.append((f"xc{bt}", LinearMap.sparse(
                int(rws.size), int(cols.size),
                list(zip(piece.row.tolist(), piece.col.tolist(),
                         piece.data.tolist())))))
        if not terms:
            raise ValueError(f"row cluster {t} touches no blocks")
        lo, hi = b_lo[rws], b_hi[rws]
        needs_slack = bool(np.any(lo != hi)) or len(terms) < 2
        if needs_slack:
            sid = f"s{t}"
            blocks.append(Block(sid, int(rws.size), SmoothFn.zero(),
                                ProxFn.box(lo, hi)))
            terms.append((sid, LinearMap.scaled_identity(int(rws.size), -1.0)))
            cons.append(Constraint(f"rc{t}", tuple(terms), np.zeros(rws.size)))
        else:
            cons.append(Constraint(f"rc{t}", tuple(terms), lo))
    info = {"row_clusters": row_of, "col_clusters": col_of,
            "col_members": col_members}
    return MultiblockProblem(blocks, cons), info
