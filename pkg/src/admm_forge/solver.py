"""Two-block ADMM engines.

exact_admm performs alternating exact minimization with a closed-form
subproblem catalog; flip_admm replaces both minimizations with single
prox-gradient steps on the smooth part of the augmented Lagrangian
(linearized x and z updates with per-block safe step sizes). The dual
update is lambda += rho * (Ax + Bz - b) in both.

Residuals: primal ||Ax + Bz - b||_inf, dual ||rho A'B (z - z_prev)||_inf,
with the l2 counterparts kept on the trace records. Termination when
max(primal, dual) < tol, at the iteration cap, or when the best residual
has not improved by 1e-14 for 1000 consecutive iterations. rho is fixed
for the whole run.

Closed-form catalog (exact mode), per block with subproblem matrix
M = H + rho * sum_e Q_e'Q_e:
  any smooth + zero prox          -> cached dense solve (Cholesky or pinv)
  smooth with diagonal M + box    -> per-coordinate clamped minimization
  zero-ish smooth with M = aI and
  affine/sum indicator            -> projection of the unconstrained minimizer
  smooth with diagonal M + l1     -> per-coordinate soft threshold
Anything else raises, naming the block; flip_admm has no such restriction.

Thread parallelism maps independent block solves over a pool; reductions
run in fixed block order, so traces are identical for any thread count.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .functions import lambda_max
from .twoblock import TwoBlockProblem

__all__ = ["SolverConfig", "TraceRecord", "AdmmTrace", "AdmmResult", "solve",
           "primal_dual_residuals", "UnsupportedBlockError"]


class UnsupportedBlockError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    tol: float = 1e-4
    max_iters: int = 10000
    algorithm: str = "exact_admm"  # "exact_admm" | "flip_admm"
    step_scale: float = 1.0        # (0, 1] safety factor for flip steps
    threads: int = 1
    log_every: int = 1

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if not (0.0 < self.step_scale <= 1.0):
            raise ValueError("step_scale must lie in (0, 1]")
        if self.algorithm not in ("exact_admm", "flip_admm"):
            raise ValueError("algorithm must be 'exact_admm' or 'flip_admm'")


@dataclass
class TraceRecord:
    iteration: int
    primal_inf: float
    dual_inf: float
    primal_l2: float
    dual_l2: float
    objective: float
    wall_time_s: float


@dataclass
class AdmmTrace:
    records: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "primal_inf", "dual_inf", "objective",
                        "wall_time_s"])
            for r in self.records:
                w.writerow([r.iteration, repr(r.primal_inf), repr(r.dual_inf),
                            repr(r.objective), repr(r.wall_time_s)])


@dataclass
class AdmmResult:
    xs: list
    zs: list
    duals: list
    status: str            # Converged | MaxIters | Stalled
    iterations: int
    objective: float
    primal_inf: float
    dual_inf: float
    trace: AdmmTrace


class _Side:
    """One side of the two-block problem in stacked coordinates."""

    def __init__(self, blocks, couplings, pick_map, pick_idx, total_rows,
                 row_offsets, rho, algorithm):
        self.blocks = blocks
        self.offsets = np.zeros(len(blocks) + 1, dtype=int)
        for k, b in enumerate(blocks):
            self.offsets[k + 1] = self.offsets[k] + b.dim
        self.total = int(self.offsets[-1])

        trips_r, trips_c, trips_v = [], [], []
        grams = [np.zeros((b.dim, b.dim)) for b in blocks]
        for ci, c in enumerate(couplings):
            k = pick_idx(c)
            m = pick_map(c).to_csr().tocoo()
            r0 = row_offsets[ci]
            c0 = self.offsets[k]
            trips_r.extend(m.row + r0)
            trips_c.extend(m.col + c0)
            trips_v.extend(m.data)
            grams[k] += pick_map(c).gram()
        self.op = sp.csr_matrix(
            (trips_v, (trips_r, trips_c)), shape=(total_rows, self.total))
        self.op_t = self.op.T.tocsr()
        self.grams = grams

        # constant gradient part and Hessian of each block's smooth term
        self.c0 = np.zeros(self.total)
        self.hess = []
        for k, b in enumerate(blocks):
            h, c = b.smooth.hessian_parts(b.dim)
            self.hess.append(h)
            self.c0[self.offsets[k]:self.offsets[k + 1]] = c

        if algorithm == "exact_admm":
            self._setup_exact(rho)
        else:
            self._setup_flip(rho)

    def slice_of(self, k):
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    # ---- exact mode ----

    def _setup_exact(self, rho):
        self.dense_solvers = []   # (k, solve callable)
        self.proj_blocks = []     # (k, alpha, prox)
        box_idx, box_d, box_lo, box_hi = [], [], [], []
        l1_idx, l1_d, l1_w = [], [], []
        for k, b in enumerate(self.blocks):
            m = self.hess[k] + rho * self.grams[k]
            kind = b.prox.kind
            if kind == "zero":
                try:
                    fac = sla.cho_factor(m)
                    self.dense_solvers.append(
                        (k, lambda v, f=fac: sla.cho_solve(f, v)))
                except (np.linalg.LinAlgError, sla.LinAlgError, ValueError):
                    pinv = np.linalg.pinv(m, hermitian=True)
                    self.dense_solvers.append(
                        (k, lambda v, p=pinv: p @ v))
            elif kind in ("box", "l1"):
                d = np.diag(m).copy()
                off = m - np.diag(d)
                if np.abs(off).max(initial=0.0) > 1e-12 * max(1.0, np.abs(m).max()):
                    raise UnsupportedBlockError(
                        f"block {b.id!r}: {kind} prox needs a diagonal "
                        "subproblem matrix; use flip_admm")
                coords = np.arange(self.offsets[k], self.offsets[k + 1])
                if kind == "box":
                    box_idx.append(coords)
                    box_d.append(d)
                    box_lo.append(np.broadcast_to(b.prox.lower, (b.dim,)))
                    box_hi.append(np.broadcast_to(b.prox.upper, (b.dim,)))
                else:
                    if np.any(d <= 0.0):
                        raise UnsupportedBlockError(
                            f"block {b.id!r}: l1 prox needs strictly positive "
                            "curvature; use flip_admm")
                    l1_idx.append(coords)
                    l1_d.append(d)
                    l1_w.append(np.full(b.dim, b.prox.weight))
            elif kind in ("affine_subspace", "sum_to_constant"):
                alpha = float(np.trace(m)) / max(m.shape[0], 1)
                if alpha <= 0.0 or np.abs(m - alpha * np.eye(m.shape[0])).max() \
                        > 1e-10 * max(1.0, alpha):
                    raise UnsupportedBlockError(
                        f"block {b.id!r}: {kind} prox needs a scaled-identity "
                        "subproblem matrix; use flip_admm")
                self.proj_blocks.append((k, alpha, b.prox))
            else:
                raise UnsupportedBlockError(
                    f"block {b.id!r}: prox kind {kind!r} outside the exact "
                    "catalog; use flip_admm")
        self.box = None
        if box_idx:
            self.box = (np.concatenate(box_idx), np.concatenate(box_d),
                        np.concatenate(box_lo), np.concatenate(box_hi))
        self.l1 = None
        if l1_idx:
            self.l1 = (np.concatenate(l1_idx), np.concatenate(l1_d),
                       np.concatenate(l1_w))

    def update_exact(self, lin, x_prev, pool=None):
        """argmin over the side given the stacked linear term of the
        augmented coupling penalty."""
        g = self.c0 + lin
        out = np.array(x_prev)

        def solve_one(item):
            k, solver = item
            sl = self.slice_of(k)
            return k, solver(-g[sl])

        if pool is not None and len(self.dense_solvers) > 1:
            results = list(pool.map(solve_one, self.dense_solvers))
        else:
            results = [solve_one(it) for it in self.dense_solvers]
        for k, val in results:
            out[self.slice_of(k)] = val

        if self.box is not None:
            idx, d, lo, hi = self.box
            v = g[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = np.where(d > 0.0, -v / np.where(d > 0.0, d, 1.0), 0.0)
            # zero-curvature coordinates minimize a linear term over the box
            flat = np.where(v > 0.0, lo, np.where(v < 0.0, hi, out[idx]))
            out[idx] = np.clip(np.where(d > 0.0, cand, flat), lo, hi)

        if self.l1 is not None:
            idx, d, w = self.l1
            v = -g[idx] / d
            t = w / d
            out[idx] = np.sign(v) * np.maximum(np.abs(v) - t, 0.0)

        for k, alpha, prox in self.proj_blocks:
            sl = self.slice_of(k)
            out[sl] = prox.project(-g[sl] / alpha)
        return out

    # ---- flip mode ----

    def _setup_flip(self, rho):
        self.steps = []
        for k, b in enumerate(self.blocks):
            c2 = max(lambda_max(self.grams[k]), 0.0)
            denom = b.smooth.lipschitz_bound + rho * c2
            self.steps.append(1.0 / denom if denom > 0.0 else 1.0)
        self.contribs_exact = [float(np.sqrt(max(lambda_max(g), 0.0)))
                               for g in self.grams]

    def smooth_gradient(self, x):
        g = np.zeros(self.total)
        for k, b in enumerate(self.blocks):
            sl = self.slice_of(k)
            g[sl] = b.smooth.gradient(x[sl])
        return g

    def update_flip(self, x, pull, step_scale):
        """One prox-gradient step per block; pull = A'(lambda + rho r)."""
        grad = self.smooth_gradient(x) + pull
        out = np.empty_like(x)
        for k, b in enumerate(self.blocks):
            sl = self.slice_of(k)
            a = step_scale * self.steps[k]
            out[sl] = b.prox.prox(x[sl] - a * grad[sl], a)
        return out

    def objective(self, x):
        total = 0.0
        for k, b in enumerate(self.blocks):
            sl = self.slice_of(k)
            total += b.smooth.value(x[sl]) + b.prox.value(x[sl])
        return total


class AdmmEngine:
    def __init__(self, problem: TwoBlockProblem, config: SolverConfig):
        self.problem = problem
        self.config = config
        rows = 0
        self.row_offsets = []
        for c in problem.couplings:
            self.row_offsets.append(rows)
            rows += c.rhs.shape[0]
        self.rows = rows
        self.b = (np.concatenate([c.rhs for c in problem.couplings])
                  if problem.couplings else np.zeros(0))
        self.left = _Side(problem.left_blocks, problem.couplings,
                          lambda c: c.map_left, lambda c: c.left,
                          rows, self.row_offsets, config.rho, config.algorithm)
        self.right = _Side(problem.right_blocks, problem.couplings,
                           lambda c: c.map_right, lambda c: c.right,
                           rows, self.row_offsets, config.rho, config.algorithm)

    def split(self, side, vec):
        return [vec[side.slice_of(k)].copy() for k in range(len(side.blocks))]

    def split_rows(self, vec):
        out = []
        for ci, c in enumerate(self.problem.couplings):
            r0 = self.row_offsets[ci]
            out.append(vec[r0:r0 + c.rhs.shape[0]].copy())
        return out

    def run(self) -> AdmmResult:
        cfg = self.config
        rho = cfg.rho
        A, B = self.left.op, self.right.op
        At, Bt = self.left.op_t, self.right.op_t
        x = np.zeros(self.left.total)
        z = np.zeros(self.right.total)
        lam = np.zeros(self.rows)
        trace = AdmmTrace()
        t0 = time.monotonic()
        status = "MaxIters"
        best = np.inf
        since_improve = 0
        primal_inf = dual_inf = np.inf
        it = 0
        pool = (ThreadPoolExecutor(max_workers=cfg.threads)
                if cfg.threads > 1 else None)
        try:
            for it in range(1, cfg.max_iters + 1):
                if cfg.algorithm == "exact_admm":
                    s = B @ z - self.b + lam / rho
                    x = self.left.update_exact(rho * (At @ s), x, pool)
                    s2 = A @ x - self.b + lam / rho
                    z_prev = z
                    z = self.right.update_exact(rho * (Bt @ s2), z, pool)
                else:
                    r = A @ x + B @ z - self.b
                    x = self.left.update_flip(x, At @ (lam + rho * r),
                                              cfg.step_scale)
                    r = A @ x + B @ z - self.b
                    z_prev = z
                    z = self.right.update_flip(z, Bt @ (lam + rho * r),
                                               cfg.step_scale)
                r = A @ x + B @ z - self.b
                lam = lam + rho * r
                dual_vec = rho * (At @ (B @ (z - z_prev)))
                primal_inf = float(np.abs(r).max(initial=0.0))
                dual_inf = float(np.abs(dual_vec).max(initial=0.0))
                if cfg.log_every > 0 and (it % cfg.log_every == 0 or it == 1):
                    trace.records.append(TraceRecord(
                        it, primal_inf, dual_inf,
                        float(np.linalg.norm(r)), float(np.linalg.norm(dual_vec)),
                        self.left.objective(x) + self.right.objective(z),
                        time.monotonic() - t0))
                worst = max(primal_inf, dual_inf)
                if worst < cfg.tol:
                    status = "Converged"
                    break
                if worst < best - 1e-14:
                    best = worst
                    since_improve = 0
                else:
                    since_improve += 1
                    if since_improve >= 1000:
                        status = "Stalled"
                        break
        finally:
            if pool is not None:
                pool.shutdown()
        if not trace.records or trace.records[-1].iteration != it:
            dual_vec = rho * (At @ (B @ (z - z_prev))) if it else np.zeros(0)
            trace.records.append(TraceRecord(
                it, primal_inf, dual_inf,
                float(np.linalg.norm(A @ x + B @ z - self.b)),
                float(np.linalg.norm(dual_vec)) if it else 0.0,
                self.left.objective(x) + self.right.objective(z),
                time.monotonic() - t0))
        return AdmmResult(
            xs=self.split(self.left, x), zs=self.split(self.right, z),
            duals=self.split_rows(lam), status=status, iterations=it,
            objective=self.left.objective(x) + self.right.objective(z),
            primal_inf=primal_inf, dual_inf=dual_inf, trace=trace)


def solve(problem: TwoBlockProblem, config: SolverConfig = None) -> AdmmResult:
    config = config or SolverConfig()
    return AdmmEngine(problem, config).run()


def primal_dual_residuals(problem: TwoBlockProblem, xs, zs, zs_prev, rho):
    """(primal_inf, dual_inf) from block-space iterates."""
    primal = 0.0
    for c in problem.couplings:
        r = c.map_left.apply(xs[c.left]) + c.map_right.apply(zs[c.right]) - c.rhs
        if r.size:
            primal = max(primal, float(np.abs(r).max()))
    dual = 0.0
    for k in range(len(problem.left_blocks)):
        acc = np.zeros(problem.left_blocks[k].dim)
        for c in problem.couplings:
            if c.left == k:
                acc += c.map_left.apply_t(
                    c.map_right.apply(zs[c.right] - zs_prev[c.right]))
        if acc.size:
            dual = max(dual, float(rho * np.abs(acc).max()))
    return primal, dual
