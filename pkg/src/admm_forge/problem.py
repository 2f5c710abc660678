"""Multiblock problem model: blocks with objectives, linear block constraints.

A problem is min sum_i f_i(x_i) + g_i(x_i) subject to, for each constraint k,
sum over participating blocks of A_i^k x_i = b^k. Every constraint must couple
at least two distinct blocks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .functions import ProxFn, SmoothFn
from .maps import LinearMap

__all__ = ["Block", "Constraint", "MultiblockProblem", "validate",
           "eval_objective", "prox_apply"]


@dataclass(frozen=True)
class Block:
    id: str
    dim: int
    smooth: SmoothFn = field(default_factory=SmoothFn.zero)
    prox: ProxFn = field(default_factory=ProxFn.zero)

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"block {self.id!r}: dim must be positive")


@dataclass(frozen=True)
class Constraint:
    id: str
    terms: tuple  # ((block_id, LinearMap), ...)
    rhs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((str(b), m) for b, m in self.terms))
        rhs = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
        rhs.flags.writeable = False
        object.__setattr__(self, "rhs", rhs)

    def block_ids(self) -> list:
        seen = []
        for b, _ in self.terms:
            if b not in seen:
                seen.append(b)
        return seen


@dataclass(frozen=True)
class MultiblockProblem:
    blocks: tuple
    constraints: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "constraints", tuple(self.constraints))

    def block(self, bid: str) -> Block:
        for b in self.blocks:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def block_index(self, bid: str) -> int:
        for i, b in enumerate(self.blocks):
            if b.id == bid:
                return i
        raise KeyError(bid)

    # ---- serialization ----

    def to_json(self) -> dict:
        return {
            "blocks": [
                {"id": b.id, "dim": b.dim, "smooth": b.smooth.to_json(),
                 "prox": b.prox.to_json()}
                for b in self.blocks
            ],
            "constraints": [
                {"id": c.id,
                 "terms": [{"block": bid, "map": m.to_json()} for bid, m in c.terms],
                 "rhs": c.rhs.tolist()}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MultiblockProblem":
        try:
            blocks = tuple(
                Block(str(b["id"]), int(b["dim"]),
                      SmoothFn.from_json(b.get("smooth", {"kind": "zero"})),
                      ProxFn.from_json(b.get("prox", {"kind": "zero"})))
                for b in obj["blocks"]
            )
            constraints = tuple(
                Constraint(str(c["id"]),
                           tuple((t["block"], LinearMap.from_json(t["map"]))
                                 for t in c["terms"]),
                           c["rhs"])
                for c in obj["constraints"]
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed problem JSON: {exc}") from exc
        return cls(blocks, constraints)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "MultiblockProblem":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def validate(problem: MultiblockProblem) -> list:
    """Collect violations as strings; empty list means well-formed."""
    errs = []
    seen = set()
    dims = {}
    for b in problem.blocks:
        if b.id in seen:
            errs.append(f"duplicate block id {b.id!r}")
        seen.add(b.id)
        dims[b.id] = b.dim
        sdim = b.smooth.dim
        if sdim is not None and sdim != b.dim:
            errs.append(f"block {b.id!r}: smooth dimension {sdim} != block dim {b.dim}")
        pdim = b.prox.dim
        if pdim is not None and pdim != b.dim:
            errs.append(f"block {b.id!r}: prox dimension {pdim} != block dim {b.dim}")

    cseen = set()
    for c in problem.constraints:
        if c.id in cseen:
            errs.append(f"duplicate constraint id {c.id!r}")
        cseen.add(c.id)
        if not np.all(np.isfinite(c.rhs)):
            errs.append(f"constraint {c.id!r}: rhs has non-finite entries")
        if len(c.block_ids()) < 2:
            errs.append(f"constraint {c.id!r}: couples fewer than two distinct blocks")
        for bid, m in c.terms:
            if bid not in dims:
                errs.append(f"constraint {c.id!r}: unknown block {bid!r}")
                continue
            if m.in_dim != dims[bid]:
                errs.append(f"constraint {c.id!r}: map for block {bid!r} has "
                            f"in_dim {m.in_dim}, block dim is {dims[bid]}")
            if m.out_dim != c.rhs.shape[0]:
                errs.append(f"constraint {c.id!r}: map for block {bid!r} has "
                            f"out_dim {m.out_dim}, rhs length is {c.rhs.shape[0]}")
    return errs


def eval_objective(problem: MultiblockProblem, xs: dict) -> float:
    """sum_i f_i(x_i) + g_i(x_i); xs maps block id -> vector."""
    total = 0.0
    for b in problem.blocks:
        x = np.asarray(xs[b.id], dtype=np.float64)
        if x.shape != (b.dim,):
            raise ValueError(f"block {b.id!r}: expected shape ({b.dim},), got {x.shape}")
        total += b.smooth.value(x) + b.prox.value(x)
    return float(total)


def prox_apply(g: ProxFn, v: np.ndarray, gamma: float) -> np.ndarray:
    return g.prox(v, gamma)
