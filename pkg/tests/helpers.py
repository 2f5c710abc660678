"""Shared construction helpers for randomized tests."""
import numpy as np

from admm_forge import (Block, Constraint, LinearMap, MultiblockProblem,
                        ProxFn, SmoothFn)


def pd_quadratic(rng, dim, scale=1.0):
    """Random strictly convex quadratic: P = M'M + cI."""
    m = rng.standard_normal((dim, dim))
    p = m.T @ m + (0.5 + rng.random()) * np.eye(dim)
    return SmoothFn.quadratic(scale * p, rng.standard_normal(dim))


def random_mbp(rng, max_blocks=6, max_dim=3, hyper_prob=0.4,
               extra_constraints=2):
    """Random feasible MBP with strictly convex quadratic blocks.

    Constraint right-hand sides come from evaluating the maps at a random
    point, so the system is always consistent. Arities mix pairs and
    3..4-block constraints.
    """
    nb = int(rng.integers(2, max_blocks + 1))
    dims = rng.integers(1, max_dim + 1, size=nb)
    blocks = [Block(f"b{i}", int(dims[i]), pd_quadratic(rng, int(dims[i])),
                    ProxFn.zero()) for i in range(nb)]
    x0 = {b.id: rng.standard_normal(b.dim) for b in blocks}
    nc = int(rng.integers(1, nb + extra_constraints))
    cons = []
    for k in range(nc):
        if nb > 2 and rng.random() < hyper_prob:
            arity = int(rng.integers(3, min(nb, 4) + 1))
        else:
            arity = 2
        members = rng.choice(nb, size=arity, replace=False)
        m = int(rng.integers(1, 3))
        terms, rhs = [], np.zeros(m)
        for i in members:
            a = rng.standard_normal((m, int(dims[i])))
            terms.append((f"b{i}", LinearMap.dense(a)))
            rhs += a @ x0[f"b{i}"]
        cons.append(Constraint(f"c{k}", tuple(terms), rhs))
    return MultiblockProblem(blocks, cons)


def mbp_from_edges(n, edges):
    """MBP whose coupling graph is exactly the given simple graph:
    one scalar block per vertex, one x_u - x_v = 0 pair per edge."""
    blocks = [Block(f"v{i}", 1, SmoothFn.quadratic([[2.0]]), ProxFn.zero())
              for i in range(n)]
    plus = LinearMap.identity(1)
    minus = LinearMap.scaled_identity(1, -1.0)
    cons = [Constraint(f"e{k}", ((f"v{u}", plus), (f"v{v}", minus)), [0.0])
            for k, (u, v) in enumerate(edges)]
    return MultiblockProblem(blocks, cons)


def random_graph_mbp(rng, max_vertices=30):
    """Random connected simple graph (tree plus extras) as an MBP."""
    n = int(rng.integers(3, max_vertices + 1))
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    present = set(edges)
    extra = int(rng.integers(0, n))
    pool = [(u, v) for u in range(n) for v in range(u + 1, n)
            if (u, v) not in present]
    order = rng.permutation(len(pool))
    for idx in order[:extra]:
        present.add(pool[idx])
    return mbp_from_edges(n, sorted(present))


def stacked_constraints(problem):
    """Global (A, b) of all constraints over concatenated block coords,
    blocks in declaration order."""
    offsets, pos = {}, 0
    for b in problem.blocks:
        offsets[b.id] = pos
        pos += b.dim
    rows = sum(c.rhs.shape[0] for c in problem.constraints)
    a = np.zeros((rows, pos))
    rhs = np.zeros(rows)
    r = 0
    for c in problem.constraints:
        m = c.rhs.shape[0]
        for bid, mp in c.terms:
            a[r:r + m, offsets[bid]:offsets[bid] + problem.block(bid).dim] \
                += mp.to_dense()
        rhs[r:r + m] = c.rhs
        r += m
    return a, rhs


def coloring_objective(graph, coloring, objective="norm_plus_counts",
                       mode="frobenius"):
    """Cost of one two-coloring: splits are forced on same-color edges and
    their new node always lands opposite the shared color."""
    import math
    from admm_forge import contribution

    side_c = {0: [], 1: []}
    splits = 0
    for v in graph.vertices:
        side_c[coloring[v.id]].append(contribution(graph, v.id, mode))
    for e in graph.edges:
        if coloring[e.u] == coloring[e.v]:
            splits += 1
            side_c[1 - coloring[e.u]].append(math.sqrt(2.0))
    t_left = max(side_c[0], default=0.0)
    t_right = max(side_c[1], default=0.0)
    if objective == "norm_only":
        return t_left
    return t_left + t_right + len(graph.vertices) + splits


def brute_force_objective(graph, objective="norm_plus_counts",
                          mode="frobenius"):
    """Exact minimum of coloring_objective over all two-colorings."""
    import itertools

    vids = [v.id for v in graph.vertices]
    best = np.inf
    for bits in itertools.product((0, 1), repeat=len(vids)):
        val = coloring_objective(graph, dict(zip(vids, bits)), objective, mode)
        best = min(best, val)
    return best
