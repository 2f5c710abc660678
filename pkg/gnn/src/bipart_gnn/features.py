"""Feature extraction for coupling-graph topologies.

The solver pipeline we target views a problem as a graph: one vertex per
variable block, one edge per pair of blocks that share a constraint, and a
relay vertex for every constraint that touches three or more blocks.  This
module rebuilds that graph from the problem JSON interchange file and attaches
a fixed-width numeric feature vector to every edge so a neural network can
consume the topology.
"""

from __future__ import annotations

import numpy as np

NODE_FEATURE_DIM = 20
EDGE_FEATURE_DIM = 15

# Edge type bits.
PAIR_EDGE = 0
RELAY_EDGE = 1


def map_to_dense(spec: dict) -> np.ndarray:
    """Decode a linear-map JSON object into a dense matrix."""
    kind = spec["kind"]
    if kind == "identity":
        return np.eye(int(spec["dim"]))
    if kind == "scaled_identity":
        return float(spec["scale"]) * np.eye(int(spec["dim"]))
    if kind == "dense":
        data = np.asarray(spec["data"], dtype=float)
        return data.reshape(int(spec["rows"]), int(spec["cols"]))
    if kind == "sparse":
        out = np.zeros((int(spec["rows"]), int(spec["cols"])))
        for i, j, v in spec["triplets"]:
            out[int(i), int(j)] += float(v)
        return out
    raise ValueError(f"unknown linear map kind {kind!r}")


def edge_feature_vector(matrix: np.ndarray, type_bit: int) -> np.ndarray:
    """Summarize one edge's coupling matrix as a fixed-width vector.

    The slots, in order: row count, column count, entry mean, entry variance,
    entry min, entry max, Frobenius norm, operator infinity norm, spectral
    norm, rank, trace of the leading square part, nonzero density, symmetry
    score, edge type bit, and a constant bias of one.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("edge matrix must be a nonempty 2-d array")
    rows, cols = a.shape
    k = min(rows, cols)
    square = a[:k, :k]
    fro = float(np.linalg.norm(a, "fro"))
    sym_defect = float(np.linalg.norm(square - square.T, "fro"))
    symmetry = 1.0 - min(1.0, sym_defect / (2.0 * fro + 1e-12))
    return np.array(
        [
            float(rows),
            float(cols),
            float(a.mean()),
            float(a.var()),
            float(a.min()),
            float(a.max()),
            fro,
            float(np.linalg.norm(a, np.inf)),
            float(np.linalg.norm(a, 2)),
            float(np.linalg.matrix_rank(a)),
            float(np.trace(square)),
            float(np.count_nonzero(a)) / a.size,
            symmetry,
            float(type_bit),
            1.0,
        ]
    )


def node_features(count: int) -> np.ndarray:
    """Initial vertex features: an all-ones matrix of fixed width."""
    return np.ones((count, NODE_FEATURE_DIM))


def build_topology(problem: dict) -> tuple[list[str], list[tuple[int, int, np.ndarray]]]:
    """Rebuild the coupling graph of a problem JSON document.

    Returns the vertex id list (blocks first in declaration order, then relay
    vertices in constraint order) and an undirected edge list of
    ``(u_index, v_index, feature_vector)`` triples.

    Pair constraints over the same two blocks merge into a single edge whose
    matrix stacks the rows of every merged constraint.  A constraint touching
    three or more blocks becomes a relay vertex joined to each touched block.
    Constraints touching fewer than two blocks produce no edge.
    """
    block_ids = [blk["id"] for blk in problem["blocks"]]
    block_pos = {bid: i for i, bid in enumerate(block_ids)}
    vertex_ids = list(block_ids)

    pair_rows: dict[tuple[int, int], list[np.ndarray]] = {}
    pair_order: list[tuple[int, int]] = []
    relay_edges: list[tuple[int, int, np.ndarray]] = []

    for con in problem.get("constraints", []):
        maps: dict[str, np.ndarray] = {}
        order: list[str] = []
        for term in con["terms"]:
            bid = term["block"]
            mat = map_to_dense(term["map"])
            if bid in maps:
                maps[bid] = maps[bid] + mat
            else:
                maps[bid] = mat
                order.append(bid)
        if len(order) < 2:
            continue
        if len(order) == 2:
            a, b = sorted(order, key=block_pos.__getitem__)
            key = (block_pos[a], block_pos[b])
            stacked = np.hstack([maps[a], maps[b]])
            if key not in pair_rows:
                pair_rows[key] = []
                pair_order.append(key)
            pair_rows[key].append(stacked)
        else:
            relay = len(vertex_ids)
            vertex_ids.append(f"con:{con['id']}")
            for bid in order:
                feat = edge_feature_vector(maps[bid], RELAY_EDGE)
                relay_edges.append((block_pos[bid], relay, feat))

    edges: list[tuple[int, int, np.ndarray]] = []
    for key in pair_order:
        merged = np.vstack(pair_rows[key])
        edges.append((key[0], key[1], edge_feature_vector(merged, PAIR_EDGE)))
    edges.extend(relay_edges)
    return vertex_ids, edges


def topology_tensors(
    vertex_ids: list[str], edges: list[tuple[int, int, np.ndarray]]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Convert an undirected edge list into flat learning inputs.

    Returns node features ``(n, 20)``, a directed edge index ``(2, 2m)`` with
    both orientations of every edge, and edge features ``(2m, 15)`` where the
    two orientations share one feature row.
    """
    nodes = node_features(len(vertex_ids))
    if not edges:
        return (
            nodes,
            np.zeros((2, 0), dtype=np.int64),
            np.zeros((0, EDGE_FEATURE_DIM)),
        )
    src = []
    dst = []
    feats = []
    for u, v, feat in edges:
        src.extend([u, v])
        dst.extend([v, u])
        feats.extend([feat, feat])
    edge_index = np.array([src, dst], dtype=np.int64)
    return nodes, edge_index, np.array(feats)
