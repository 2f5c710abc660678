"""Command-line front end.

Subcommands:
  generate   emit a benchmark instance as problem JSON
  bipartize  problem -> coupling graph -> partition decision + metrics
  solve      full pipeline through the ADMM engine, trace + summary
  compare    aggregate solve summaries into a per-method CSV

Verbosity via the ADMM_FORGE_LOG environment variable (debug/info/...).
Failed convergence is still a valid data point: solve exits 0 and records
the status in the summary; genuine errors exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time

from .bipartize import (basic_decision, bfs_bipartize, import_decision,
                        materialize, read_assignment)
from .graph import build_coupling_graph
from .milp import build_milp, solve_milp
from .problem import MultiblockProblem
from .solver import SolverConfig, solve
from .twoblock import assemble
from . import zoo

log = logging.getLogger("admm_forge")


def _floats(text: str):
    return [float(t) for t in text.replace(",", " ").split()]


def _load_problem(args):
    """Resolve the instance from a path or a generator spec; returns
    (problem, instance descriptor)."""
    has_path = getattr(args, "problem", None) is not None
    has_family = getattr(args, "family", None) is not None
    if has_path == has_family:
        raise SystemExit("exactly one of a problem path or --family is required")
    if has_path:
        return MultiblockProblem.load(args.problem), args.problem
    return _generate(args)


def _generate(args):
    fam = args.family
    seed = args.seed
    if fam == "circuit":
        prob = zoo.gen_circuit(_floats(args.resistances), _floats(args.sources))
        desc = f"circuit(R={args.resistances},J={args.sources})"
    elif fam == "network_flow":
        prob, _ = zoo.gen_network_flow(args.nodes, args.arcs, seed)
        desc = f"network_flow(nodes={args.nodes},arcs={args.arcs},seed={seed})"
    elif fam == "consensus_ls":
        _, standard, direct = zoo.gen_consensus_ls(
            args.agents, seed, dim=args.dim, rows=args.rows)
        prob = standard if args.form == "standard" else direct
        desc = (f"consensus_ls(agents={args.agents},dim={args.dim},"
                f"rows={args.rows},seed={seed},form={args.form})")
    else:
        raise SystemExit(f"unknown family {fam!r}")
    return prob, desc


def _decide(graph, args):
    """Run the selected partition method. Returns (decision, seconds, info)."""
    t0 = time.perf_counter()
    info = {}
    if args.method == "basic":
        dec = basic_decision(graph)
    elif args.method in ("bfs", "dfs"):
        dec = bfs_bipartize(graph, traversal=args.method)
    elif args.method == "milp":
        model = build_milp(graph, contribution_mode=args.contribution)
        dec, info = solve_milp(model, rel_gap=args.milp_gap,
                               time_limit=args.milp_time_limit,
                               threads=args.threads)
    elif args.method == "import":
        if not args.assignment:
            raise SystemExit("--method import requires --assignment PATH")
        dec = import_decision(graph, read_assignment(args.assignment))
    else:
        raise SystemExit(f"unknown method {args.method!r}")
    return dec, time.perf_counter() - t0, info


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_generate(args) -> int:
    if args.family is None:
        raise SystemExit("generate requires --family")
    prob, desc = _generate(args)
    out = os.path.join(_outdir(args), f"{args.family}.json")
    prob.dump(out)
    log.info("generated %s -> %s", desc, out)
    print(out)
    return 0


def cmd_bipartize(args) -> int:
    prob, desc = _load_problem(args)
    graph = build_coupling_graph(prob)
    dec, seconds, info = _decide(graph, args)
    bip = materialize(graph, dec)
    out = _outdir(args)
    dec.dump(os.path.join(out, "decision.json"))
    bip.dump(os.path.join(out, "bipartite.json"))
    metrics = bip.metrics().to_json()
    metrics.update({"instance": desc, "method": args.method,
                    "splits": dec.split_count(),
                    "partition_time_s": seconds})
    if info:
        metrics["milp"] = {k: info[k] for k in
                           ("objective", "bound", "gap", "status",
                            "nodes_explored") if k in info}
    with open(os.path.join(out, "metrics.json"), "w") as fh:
        json.dump(metrics, fh, indent=2)
    log.info("bipartized %s with %s: %d splits in %.3fs",
             desc, args.method, dec.split_count(), seconds)
    print(json.dumps(metrics, indent=2))
    return 0


def cmd_solve(args) -> int:
    prob, desc = _load_problem(args)
    graph = build_coupling_graph(prob)
    dec, part_s, info = _decide(graph, args)
    bip = materialize(graph, dec)
    two = assemble(bip)
    cfg = SolverConfig(
        rho=args.rho, tol=args.tol, max_iters=args.max_iters,
        algorithm="flip_admm" if args.algorithm == "flip" else "exact_admm",
        threads=args.threads, log_every=args.log_every)
    t0 = time.perf_counter()
    res = solve(two, cfg)
    admm_s = time.perf_counter() - t0
    out = _outdir(args)
    res.trace.to_csv(os.path.join(out, "trace.csv"))
    summary = {
        "instance": desc, "method": args.method, "algorithm": args.algorithm,
        "status": res.status, "iterations": res.iterations,
        "partition_time_s": part_s, "admm_time_s": admm_s,
        "total_time_s": part_s + admm_s, "objective": res.objective,
        "primal_inf": res.primal_inf, "dual_inf": res.dual_inf,
        "splits": dec.split_count(), "rho": args.rho, "tol": args.tol,
    }
    if info:
        summary["milp_status"] = info.get("status")
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    log.info("solved %s with %s/%s: %s after %d iterations",
             desc, args.method, args.algorithm, res.status, res.iterations)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_compare(args) -> int:
    groups = {}
    for path in args.summaries:
        with open(path) as fh:
            s = json.load(fh)
        groups.setdefault(s["method"], []).append(s)
    if len(groups) < 1 or sum(len(v) for v in groups.values()) < 2:
        raise SystemExit("compare needs at least two summaries")
    instance_sets = {m: sorted(s["instance"] for s in v)
                     for m, v in groups.items()}
    reference = next(iter(instance_sets.values()))
    for m, inst in instance_sets.items():
        if inst != reference:
            raise SystemExit(
                f"method {m!r} covers different instances than the others")

    def mean(vals):
        return sum(vals) / len(vals)

    rows = []
    for m in sorted(groups):
        v = groups[m]
        rows.append({
            "method": m,
            "runs": len(v),
            "iterations_mean": mean([s["iterations"] for s in v]),
            "partition_time_s_mean": mean([s["partition_time_s"] for s in v]),
            "admm_time_s_mean": mean([s["admm_time_s"] for s in v]),
            "total_time_s_mean": mean([s["total_time_s"] for s in v]),
        })
    max_iter = max(r["iterations_mean"] for r in rows) or 1.0
    max_time = max(r["total_time_s_mean"] for r in rows) or 1.0
    for r in rows:
        r["iterations_norm"] = r["iterations_mean"] / max_iter
        r["total_time_norm"] = r["total_time_s_mean"] / max_time
    out = os.path.join(_outdir(args), "compare.csv")
    cols = ["method", "runs", "iterations_mean", "iterations_norm",
            "partition_time_s_mean", "admm_time_s_mean",
            "total_time_s_mean", "total_time_norm"]
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"{r['method']:8s} iters={r['iterations_mean']:10.1f} "
              f"({r['iterations_norm']:.3f})  "
              f"time={r['total_time_s_mean']:8.3f}s "
              f"({r['total_time_norm']:.3f})")
    return 0


def _add_generator_flags(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--family",
                   choices=["circuit", "network_flow", "consensus_ls"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resistances", default="1e-6,1e2,1e8")
    p.add_argument("--sources", default="-50,100,-50")
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--arcs", type=int, default=40)
    p.add_argument("--agents", type=int, default=10)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--rows", type=int, default=25)
    p.add_argument("--form", choices=["direct", "standard"], default="direct")


def _add_pipeline_flags(p):
    p.add_argument("problem", nargs="?", help="problem JSON path")
    p.add_argument("--method", default="bfs",
                   choices=["basic", "bfs", "dfs", "milp", "import"])
    p.add_argument("--assignment", help="vertex assignment file for import")
    p.add_argument("--milp-gap", type=float, default=0.01)
    p.add_argument("--milp-time-limit", type=float, default=60.0)
    p.add_argument("--contribution", default="frobenius",
                   choices=["exact", "frobenius"])
    p.add_argument("--threads", type=int, default=1)
    _add_generator_flags(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="admm-forge",
        description="multiblock problems -> bipartite two-block form -> "
                    "parallel ADMM")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a benchmark instance")
    _add_generator_flags(g)
    g.set_defaults(fn=cmd_generate)

    b = sub.add_parser("bipartize", help="partition the coupling graph")
    _add_pipeline_flags(b)
    b.set_defaults(fn=cmd_bipartize)

    s = sub.add_parser("solve", help="run the full pipeline")
    _add_pipeline_flags(s)
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--max-iters", type=int, default=10000)
    s.add_argument("--algorithm", choices=["exact", "flip"], default="exact")
    s.add_argument("--log-every", type=int, default=1)
    s.set_defaults(fn=cmd_solve)

    c = sub.add_parser("compare", help="aggregate solve summaries")
    c.add_argument("summaries", nargs="+")
    c.add_argument("--out", default=".", help="output directory")
    c.set_defaults(fn=cmd_compare)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("ADMM_FORGE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit:
        raise
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
