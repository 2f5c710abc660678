"""Random coupled quadratic programs and labeled training data.

Each instance is a connected graph of variable blocks tied together by random
linear equality constraints, written out in the problem JSON interchange
format of the solver pipeline.  Ground-truth vertex sides come from the
pipeline's own command-line tool, run with its optimization-based partition
method, so the network learns to imitate the partitioner it will replace.
"""

from __future__ import annotations

import json
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from .features import build_topology, topology_tensors

FRO_SLOT = 6  # index of the Frobenius norm inside an edge feature vector


@dataclass
class TrainingInstance:
    """One graph with learning tensors and optional per-vertex side labels."""

    name: str
    vertex_ids: list[str]
    node_feats: np.ndarray
    edge_index: np.ndarray
    edge_feats: np.ndarray
    labels: np.ndarray | None
    problem: dict


def gen_problem(rng: np.random.Generator, nodes: int) -> dict:
    """Draw one feasible coupled quadratic program as a problem JSON dict.

    Block dimensions come from {2, 3, 4, 5} and all matrix entries are
    standard normal.  The coupling graph is a random tree plus at most one
    extra edge; keeping the stacked constraint system roughly square is what
    lets the feasibility check below succeed at a useful rate, since random
    equality systems with more rows than columns are almost surely
    inconsistent.  Infeasible draws are discarded and redrawn.
    """
    if nodes < 2:
        raise ValueError("an instance needs at least two blocks")
    while True:
        dims = rng.integers(2, 6, size=nodes)
        edges = [(int(rng.integers(0, i)), i) for i in range(1, nodes)]
        if rng.random() < 0.7:
            present = set(edges)
            u, v = rng.integers(0, nodes, size=2)
            u, v = int(min(u, v)), int(max(u, v))
            if u != v and (u, v) not in present:
                edges.append((u, v))
        couplings = [
            (
                u,
                v,
                rng.standard_normal((m, dims[u])),
                rng.standard_normal((m, dims[v])),
                rng.standard_normal(m),
            )
            for u, v in edges
            for m in [int(rng.integers(2, 6))]
        ]
        quads = [
            (rng.standard_normal((d, d)), rng.standard_normal(d)) for d in dims
        ]
        if _feasible(nodes, dims, couplings):
            break

    blocks = []
    for i, (m, q) in enumerate(quads):
        p = m.T @ m
        blocks.append(
            {
                "id": f"x{i}",
                "dim": int(dims[i]),
                "smooth": {"kind": "quadratic", "p": p.tolist(), "q": q.tolist()},
                "prox": {"kind": "zero"},
            }
        )
    constraints = []
    for k, (u, v, au, av, b) in enumerate(couplings):
        constraints.append(
            {
                "id": f"e{k}",
                "terms": [
                    {
                        "block": f"x{u}",
                        "map": {
                            "kind": "dense",
                            "rows": au.shape[0],
                            "cols": au.shape[1],
                            "data": au.tolist(),
                        },
                    },
                    {
                        "block": f"x{v}",
                        "map": {
                            "kind": "dense",
                            "rows": av.shape[0],
                            "cols": av.shape[1],
                            "data": av.tolist(),
                        },
                    },
                ],
                "rhs": b.tolist(),
            }
        )
    return {"blocks": blocks, "constraints": constraints}


def _feasible(nodes: int, dims: np.ndarray, couplings: list) -> bool:
    """Solve the stacked linear feasibility system by least squares."""
    offsets = np.concatenate([[0], np.cumsum(dims)])
    total = int(offsets[-1])
    rows = sum(c[4].size for c in couplings)
    a = np.zeros((rows, total))
    b = np.zeros(rows)
    r = 0
    for u, v, au, av, rhs in couplings:
        m = rhs.size
        a[r : r + m, offsets[u] : offsets[u + 1]] = au
        a[r : r + m, offsets[v] : offsets[v + 1]] = av
        b[r : r + m] = rhs
        r += m
    x = np.linalg.lstsq(a, b, rcond=None)[0]
    return float(np.linalg.norm(a @ x - b)) <= 1e-8 * (1.0 + float(np.linalg.norm(b)))


def anchor_vertex(edge_index: np.ndarray, edge_feats: np.ndarray, count: int) -> int:
    """Pick the vertex with the largest incident Frobenius mass.

    Used to fix the global side flip: a two-sided assignment and its mirror
    have identical cost, so labels are normalized so this vertex sits on
    side 0.  Ties break toward the lowest vertex index.  The edge index holds
    both orientations of every edge, so summing over destinations counts each
    incident edge exactly once per endpoint.
    """
    mass = np.zeros(count)
    np.add.at(mass, edge_index[1], edge_feats[:, FRO_SLOT])
    return int(np.argmax(mass))


def canonical_labels(inst: TrainingInstance, coloring: dict[str, int]) -> np.ndarray:
    """Align a vertex coloring to the vertex order and normalize its flip."""
    labels = np.array(
        [float(coloring[vid]) for vid in inst.vertex_ids], dtype=np.float32
    )
    anchor = anchor_vertex(inst.edge_index, inst.edge_feats, len(inst.vertex_ids))
    if labels[anchor] == 1.0:
        labels = 1.0 - labels
    return labels


def label_problem(
    problem_path: str | Path,
    out_dir: str | Path,
    cli: str = "admm-forge",
    gap: float = 0.0,
    time_limit: float = 10.0,
) -> dict[str, int]:
    """Run the pipeline's optimization-based partitioner on one problem file.

    Returns the vertex coloring from the decision file it writes.  Raises
    RuntimeError if the command-line tool is missing or fails.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cmd = [
        cli,
        "bipartize",
        str(problem_path),
        "--method",
        "milp",
        f"--milp-gap={gap}",
        f"--milp-time-limit={time_limit}",
        "--out",
        str(out_dir),
    ]
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True)
    except FileNotFoundError as exc:
        raise RuntimeError(
            f"partitioning command-line tool {cli!r} is not available; "
            "install the solver package so its CLI is on PATH"
        ) from exc
    if proc.returncode != 0:
        raise RuntimeError(
            f"partitioning command failed with code {proc.returncode}: "
            f"{proc.stderr.strip()}"
        )
    with open(out_dir / "decision.json", encoding="utf-8") as fh:
        decision = json.load(fh)
    return {vid: int(side) for vid, side in decision["coloring"].items()}


def featurize_problem(problem: dict, name: str = "instance") -> TrainingInstance:
    """Build unlabeled learning tensors for one problem JSON dict."""
    vertex_ids, edges = build_topology(problem)
    node_feats, edge_index, edge_feats = topology_tensors(vertex_ids, edges)
    return TrainingInstance(
        name=name,
        vertex_ids=vertex_ids,
        node_feats=node_feats,
        edge_index=edge_index,
        edge_feats=edge_feats,
        labels=None,
        problem=problem,
    )


def gen_dataset(
    count: int,
    nodes_per_graph: int = 20,
    seed: int = 0,
    workdir: str | Path | None = None,
    jobs: int = 1,
    cli: str = "admm-forge",
    gap: float = 0.0,
    time_limit: float = 10.0,
) -> list[TrainingInstance]:
    """Generate, write, label, and featurize a dataset of coupled programs.

    The same seed always produces the same dataset: generation is driven by
    one seeded generator and the labeling partitioner is deterministic.
    Problem files and label runs land under ``workdir`` (a temporary
    directory when omitted).  ``jobs`` labeling subprocesses run at a time.
    """
    rng = np.random.default_rng(seed)
    if workdir is None:
        with TemporaryDirectory() as tmp:
            return _build(count, nodes_per_graph, rng, Path(tmp), jobs, cli, gap, time_limit)
    work = Path(workdir)
    work.mkdir(parents=True, exist_ok=True)
    return _build(count, nodes_per_graph, rng, work, jobs, cli, gap, time_limit)


def _build(
    count: int,
    nodes: int,
    rng: np.random.Generator,
    work: Path,
    jobs: int,
    cli: str,
    gap: float,
    time_limit: float,
) -> list[TrainingInstance]:
    problems = []
    paths = []
    for g in range(count):
        problem = gen_problem(rng, nodes)
        path = work / f"inst_{g:04d}.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(problem, fh)
        problems.append(problem)
        paths.append(path)

    def run(g: int) -> dict[str, int]:
        return label_problem(paths[g], work / f"label_{g:04d}", cli, gap, time_limit)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        colorings = list(pool.map(run, range(count)))

    instances = []
    for g, (problem, coloring) in enumerate(zip(problems, colorings)):
        inst = featurize_problem(problem, name=f"inst_{g:04d}")
        if set(coloring) != set(inst.vertex_ids):
            raise RuntimeError(
                f"partitioner colored vertices {sorted(coloring)} but the "
                f"topology has {sorted(inst.vertex_ids)}"
            )
        inst.labels = canonical_labels(inst, coloring)
        instances.append(inst)
    return instances
