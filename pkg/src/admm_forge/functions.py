"""Smooth objective terms and proximable terms attached to blocks.

SmoothFn provides value/gradient plus a Lipschitz bound for the gradient;
ProxFn provides value and the proximal map prox_{gamma g}. Indicator
membership uses a 1e-9 tolerance on equalities and exact bounds on boxes.
"""
from __future__ import annotations

import math

import numpy as np

from .maps import LinearMap

__all__ = ["SmoothFn", "ProxFn", "lambda_max", "EQ_TOL"]

EQ_TOL = 1e-9          # indicator tolerance on linear equalities
PINV_CUTOFF = 1e-10    # relative singular value cutoff for projections


def lambda_max(m: np.ndarray, iters: int = 100, tol: float = 1e-8) -> float:
    """Largest eigenvalue of a symmetric PSD matrix via power iteration."""
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    if n == 0:
        return 0.0
    rng = np.random.default_rng(7)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = m @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam_new = float(v @ (m @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


class SmoothFn:
    """Smooth part of a block objective. Kinds: zero, linear, quadratic,
    least_squares. Quadratic is (1/2) x'Px + q'x with P symmetric PSD;
    least_squares is ||Qx - q||^2 (no 1/2)."""

    __slots__ = ("kind", "q", "p", "qmap", "target", "lipschitz_bound")

    def __init__(self, kind, q=None, p=None, qmap=None, target=None, lipschitz=None):
        self.kind = kind
        self.q = q
        self.p = p
        self.qmap = qmap
        self.target = target
        if lipschitz is None:
            lipschitz = self._default_lipschitz()
        self.lipschitz_bound = float(lipschitz)

    @classmethod
    def zero(cls) -> "SmoothFn":
        return cls("zero")

    @classmethod
    def linear(cls, q) -> "SmoothFn":
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        q.flags.writeable = False
        return cls("linear", q=q)

    @classmethod
    def quadratic(cls, p, q=None, lipschitz=None) -> "SmoothFn":
        p = np.asarray(p, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("quadratic P must be square")
        scale = max(1.0, float(np.abs(p).max()))
        if not np.allclose(p, p.T, atol=1e-8 * scale):
            raise ValueError("quadratic P must be symmetric")
        if float(np.linalg.eigvalsh((p + p.T) / 2.0).min()) < -1e-8 * scale:
            raise ValueError("quadratic P must be positive semidefinite")
        if q is None:
            q = np.zeros(p.shape[0])
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        if q.shape[0] != p.shape[0]:
            raise ValueError("quadratic q does not match P")
        p = np.ascontiguousarray(p)
        p.flags.writeable = False
        q.flags.writeable = False
        return cls("quadratic", q=q, p=p, lipschitz=lipschitz)

    @classmethod
    def least_squares(cls, qmap, target, lipschitz=None) -> "SmoothFn":
        if not isinstance(qmap, LinearMap):
            qmap = LinearMap.dense(qmap)
        target = np.asarray(target, dtype=np.float64).reshape(-1)
        if target.shape[0] != qmap.out_dim:
            raise ValueError("least_squares target does not match Q rows")
        target.flags.writeable = False
        return cls("least_squares", qmap=qmap, target=target, lipschitz=lipschitz)

    def _default_lipschitz(self) -> float:
        if self.kind in ("zero", "linear"):
            return 0.0
        if self.kind == "quadratic":
            return lambda_max(self.p)
        # ||Qx-q||^2 has gradient Lipschitz constant 2 sigma_max(Q)^2
        return 2.0 * lambda_max(self.qmap.gram())

    @property
    def dim(self):
        """Input dimension when it is intrinsic to the data, else None."""
        if self.kind == "linear":
            return self.q.shape[0]
        if self.kind == "quadratic":
            return self.p.shape[0]
        if self.kind == "least_squares":
            return self.qmap.in_dim
        return None

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "zero":
            return 0.0
        if self.kind == "linear":
            return float(self.q @ x)
        if self.kind == "quadratic":
            return float(0.5 * x @ (self.p @ x) + self.q @ x)
        r = self.qmap.apply(x) - self.target
        return float(r @ r)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return self.q.copy()
        if self.kind == "quadratic":
            return self.p @ x + self.q
        return 2.0 * self.qmap.apply_t(self.qmap.apply(x) - self.target)

    def hessian_parts(self, dim: int):
        """(H, c) such that gradient(x) = H x + c, H dense dim x dim."""
        if self.kind == "zero":
            return np.zeros((dim, dim)), np.zeros(dim)
        if self.kind == "linear":
            return np.zeros((dim, dim)), self.q.copy()
        if self.kind == "quadratic":
            return np.array(self.p), self.q.copy()
        qd = self.qmap.to_dense()
        return 2.0 * qd.T @ qd, -2.0 * self.qmap.apply_t(self.target)

    def to_json(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "linear":
            return {"kind": "linear", "q": self.q.tolist()}
        if self.kind == "quadratic":
            return {"kind": "quadratic", "p": self.p.tolist(), "q": self.q.tolist()}
        return {"kind": "least_squares", "q_matrix": self.qmap.to_json(),
                "target": self.target.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SmoothFn":
        kind = obj.get("kind")
        if kind == "zero":
            return cls.zero()
        if kind == "linear":
            return cls.linear(obj["q"])
        if kind == "quadratic":
            return cls.quadratic(obj["p"], obj["q"])
        if kind == "least_squares":
            return cls.least_squares(LinearMap.from_json(obj["q_matrix"]), obj["target"])
        raise ValueError(f"unknown smooth kind {kind!r}")

    def __repr__(self):
        return f"SmoothFn({self.kind})"


def _soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


class ProxFn:
    """Proximable part of a block objective. Kinds: zero, box,
    affine_subspace, sum_to_constant, l1."""

    __slots__ = ("kind", "lower", "upper", "cmat", "d", "_pinv", "target",
                 "arity", "weight")

    def __init__(self, kind, **kw):
        self.kind = kind
        self.lower = kw.get("lower")
        self.upper = kw.get("upper")
        self.cmat = kw.get("cmat")
        self.d = kw.get("d")
        self._pinv = kw.get("pinv")
        self.target = kw.get("target")
        self.arity = kw.get("arity")
        self.weight = kw.get("weight")

    @classmethod
    def zero(cls) -> "ProxFn":
        return cls("zero")

    @classmethod
    def box(cls, lower, upper) -> "ProxFn":
        lower = np.asarray(lower, dtype=np.float64).reshape(-1)
        upper = np.asarray(upper, dtype=np.float64).reshape(-1)
        if lower.shape != upper.shape:
            raise ValueError("box bounds must have equal length")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper")
        lower.flags.writeable = False
        upper.flags.writeable = False
        return cls("box", lower=lower, upper=upper)

    @classmethod
    def affine_subspace(cls, cmat, d) -> "ProxFn":
        """Indicator of {x : Cx = d}. The projection factor is precomputed;
        an inconsistent system errors here rather than at prox time."""
        cmat = np.atleast_2d(np.asarray(cmat, dtype=np.float64))
        d = np.asarray(d, dtype=np.float64).reshape(-1)
        if cmat.shape[0] != d.shape[0]:
            raise ValueError("affine_subspace: C rows must match d length")
        pinv = np.linalg.pinv(cmat, rcond=PINV_CUTOFF)
        x_ls = pinv @ d
        resid = float(np.linalg.norm(cmat @ x_ls - d, np.inf))
        if resid > EQ_TOL * (1.0 + float(np.linalg.norm(d, np.inf))):
            raise ValueError("affine_subspace: system Cx=d has no solution")
        cmat.flags.writeable = False
        d.flags.writeable = False
        return cls("affine_subspace", cmat=cmat, d=d, pinv=pinv)

    @classmethod
    def sum_to_constant(cls, target, arity: int) -> "ProxFn":
        """Indicator of {(y_1..y_p) : sum_i y_i = target}, each y_i in R^m."""
        target = np.asarray(target, dtype=np.float64).reshape(-1)
        arity = int(arity)
        if arity < 2:
            raise ValueError("sum_to_constant arity must be >= 2")
        target.flags.writeable = False
        return cls("sum_to_constant", target=target, arity=arity)

    @classmethod
    def l1(cls, weight: float) -> "ProxFn":
        weight = float(weight)
        if weight < 0:
            raise ValueError("l1 weight must be nonnegative")
        return cls("l1", weight=weight)

    @property
    def dim(self):
        if self.kind == "box":
            return self.lower.shape[0]
        if self.kind == "affine_subspace":
            return self.cmat.shape[1]
        if self.kind == "sum_to_constant":
            return self.arity * self.target.shape[0]
        return None

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "zero":
            return 0.0
        if self.kind == "box":
            # box membership is exact, no tolerance
            if np.all(x >= self.lower) and np.all(x <= self.upper):
                return 0.0
            return math.inf
        if self.kind == "affine_subspace":
            r = float(np.linalg.norm(self.cmat @ x - self.d, np.inf))
            if r <= EQ_TOL * (1.0 + float(np.linalg.norm(self.d, np.inf))):
                return 0.0
            return math.inf
        if self.kind == "sum_to_constant":
            m = self.target.shape[0]
            s = x.reshape(self.arity, m).sum(axis=0)
            r = float(np.linalg.norm(s - self.target, np.inf))
            if r <= EQ_TOL * (1.0 + float(np.linalg.norm(self.target, np.inf))):
                return 0.0
            return math.inf
        return self.weight * float(np.abs(x).sum())

    def prox(self, v: np.ndarray, gamma: float = 1.0) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.kind == "zero":
            return v.copy()
        if self.kind == "box":
            return np.clip(v, self.lower, self.upper)
        if self.kind == "affine_subspace":
            return v - self._pinv @ (self.cmat @ v - self.d)
        if self.kind == "sum_to_constant":
            m = self.target.shape[0]
            y = v.reshape(self.arity, m)
            shift = (self.target - y.sum(axis=0)) / self.arity
            return (y + shift).reshape(-1)
        return _soft_threshold(v, gamma * self.weight)

    def project(self, v: np.ndarray) -> np.ndarray:
        """Euclidean projection; only meaningful for indicator kinds."""
        if self.kind == "l1":
            raise ValueError("l1 is not an indicator")
        return self.prox(v, 1.0)

    def to_json(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "box":
            enc = lambda a: [None if math.isinf(x) else x for x in a]
            return {"kind": "box", "lower": enc(self.lower), "upper": enc(self.upper)}
        if self.kind == "affine_subspace":
            return {"kind": "affine_subspace", "c": self.cmat.tolist(), "d": self.d.tolist()}
        if self.kind == "sum_to_constant":
            return {"kind": "sum_to_constant", "target": self.target.tolist(),
                    "arity": self.arity}
        return {"kind": "l1", "weight": self.weight}

    @classmethod
    def from_json(cls, obj: dict) -> "ProxFn":
        kind = obj.get("kind")
        if kind == "zero":
            return cls.zero()
        if kind == "box":
            dec_lo = [(-math.inf if x is None else x) for x in obj["lower"]]
            dec_hi = [(math.inf if x is None else x) for x in obj["upper"]]
            return cls.box(dec_lo, dec_hi)
        if kind == "affine_subspace":
            return cls.affine_subspace(obj["c"], obj["d"])
        if kind == "sum_to_constant":
            return cls.sum_to_constant(obj["target"], obj["arity"])
        if kind == "l1":
            return cls.l1(obj["weight"])
        raise ValueError(f"unknown prox kind {kind!r}")

    def __repr__(self):
        return f"ProxFn({self.kind})"
