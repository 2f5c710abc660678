"""Linear coupling coefficients.

A LinearMap is an immutable wrapper around one of four representations
(identity, scaled identity, dense, sparse-by-triplets) with a common
apply / transpose-apply / stacking interface. Everything is float64.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = ["LinearMap"]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


class LinearMap:
    """A linear map R^in_dim -> R^out_dim.

    Construct through the factory classmethods; the constructor is internal.
    """

    __slots__ = ("kind", "out_dim", "in_dim", "scale", "_dense", "_csr")

    def __init__(self, kind, out_dim, in_dim, scale=None, dense=None, csr=None):
        if out_dim <= 0 or in_dim <= 0:
            raise ValueError("map dimensions must be positive")
        self.kind = kind
        self.out_dim = int(out_dim)
        self.in_dim = int(in_dim)
        self.scale = scale
        self._dense = dense
        self._csr = csr

    # ---- factories ----

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls("identity", dim, dim)

    @classmethod
    def scaled_identity(cls, dim: int, scale: float) -> "LinearMap":
        return cls("scaled_identity", dim, dim, scale=float(scale))

    @classmethod
    def dense(cls, matrix) -> "LinearMap":
        m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        if m.ndim != 2:
            raise ValueError("dense map must be a 2-d array")
        return cls("dense", m.shape[0], m.shape[1], dense=_freeze(m))

    @classmethod
    def sparse(cls, out_dim: int, in_dim: int, triplets) -> "LinearMap":
        rows, cols, vals = [], [], []
        for (i, j, v) in triplets:
            if not (0 <= i < out_dim and 0 <= j < in_dim):
                raise ValueError(f"triplet ({i},{j}) outside {out_dim}x{in_dim}")
            rows.append(i)
            cols.append(j)
            vals.append(float(v))
        coo = sp.coo_matrix((vals, (rows, cols)), shape=(out_dim, in_dim), dtype=np.float64)
        # canonicalize: duplicate (row, col) entries are summed
        coo.sum_duplicates()
        return cls("sparse", out_dim, in_dim, csr=coo.tocsr())

    @classmethod
    def vstack(cls, maps) -> "LinearMap":
        """Stack maps vertically; all must share in_dim."""
        maps = list(maps)
        if not maps:
            raise ValueError("vstack of no maps")
        if len(maps) == 1:
            return maps[0]
        in_dim = maps[0].in_dim
        if any(m.in_dim != in_dim for m in maps):
            raise ValueError("vstack requires a common in_dim")
        if all(m.kind == "dense" for m in maps):
            return cls.dense(np.vstack([m.to_dense() for m in maps]))
        stacked = sp.vstack([m.to_csr() for m in maps], format="csr")
        out = cls("sparse", stacked.shape[0], in_dim, csr=stacked)
        return out

    # ---- operations ----

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.in_dim,):
            raise ValueError(f"expected input of shape ({self.in_dim},), got {x.shape}")
        if self.kind == "identity":
            return x.copy()
        if self.kind == "scaled_identity":
            return self.scale * x
        if self.kind == "dense":
            return self._dense @ x
        return self._csr @ x

    def apply_t(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.out_dim,):
            raise ValueError(f"expected input of shape ({self.out_dim},), got {y.shape}")
        if self.kind == "identity":
            return y.copy()
        if self.kind == "scaled_identity":
            return self.scale * y
        if self.kind == "dense":
            return self._dense.T @ y
        return self._csr.T @ y

    def to_dense(self) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(self.out_dim)
        if self.kind == "scaled_identity":
            return self.scale * np.eye(self.out_dim)
        if self.kind == "dense":
            return np.array(self._dense)
        return self._csr.toarray()

    def to_csr(self) -> sp.csr_matrix:
        if self.kind == "identity":
            return sp.identity(self.out_dim, format="csr")
        if self.kind == "scaled_identity":
            return self.scale * sp.identity(self.out_dim, format="csr")
        if self.kind == "dense":
            return sp.csr_matrix(self._dense)
        return self._csr

    def gram(self) -> np.ndarray:
        """Dense A^T A, used for contributions and subproblem Hessians."""
        if self.kind == "identity":
            return np.eye(self.in_dim)
        if self.kind == "scaled_identity":
            return self.scale**2 * np.eye(self.in_dim)
        a = self.to_dense()
        return a.T @ a

    def frobenius_norm(self) -> float:
        if self.kind == "identity":
            return float(np.sqrt(self.out_dim))
        if self.kind == "scaled_identity":
            return float(abs(self.scale) * np.sqrt(self.out_dim))
        if self.kind == "dense":
            return float(np.linalg.norm(self._dense, "fro"))
        return float(sp.linalg.norm(self._csr, "fro"))

    def negate(self) -> "LinearMap":
        if self.kind == "identity":
            return LinearMap.scaled_identity(self.out_dim, -1.0)
        if self.kind == "scaled_identity":
            return LinearMap.scaled_identity(self.out_dim, -self.scale)
        if self.kind == "dense":
            return LinearMap.dense(-self.to_dense())
        neg = -self._csr
        return LinearMap("sparse", self.out_dim, self.in_dim, csr=neg.tocsr())

    # ---- serialization ----

    def to_json(self) -> dict:
        if self.kind == "identity":
            return {"kind": "identity", "dim": self.out_dim}
        if self.kind == "scaled_identity":
            return {"kind": "scaled_identity", "dim": self.out_dim, "scale": self.scale}
        if self.kind == "dense":
            return {"kind": "dense", "rows": self.out_dim, "cols": self.in_dim,
                    "data": self._dense.tolist()}
        coo = self._csr.tocoo()
        trips = [[int(i), int(j), float(v)] for i, j, v in zip(coo.row, coo.col, coo.data)]
        return {"kind": "sparse", "rows": self.out_dim, "cols": self.in_dim,
                "triplets": trips}

    @classmethod
    def from_json(cls, obj: dict) -> "LinearMap":
        kind = obj.get("kind")
        if kind == "identity":
            return cls.identity(obj["dim"])
        if kind == "scaled_identity":
            return cls.scaled_identity(obj["dim"], obj["scale"])
        if kind == "dense":
            m = np.asarray(obj["data"], dtype=np.float64)
            if m.shape != (obj["rows"], obj["cols"]):
                raise ValueError("dense map data does not match declared rows/cols")
            return cls.dense(m)
        if kind == "sparse":
            return cls.sparse(obj["rows"], obj["cols"], obj["triplets"])
        raise ValueError(f"unknown map kind {kind!r}")

    def __eq__(self, other):
        if not isinstance(other, LinearMap):
            return NotImplemented
        if (self.out_dim, self.in_dim) != (other.out_dim, other.in_dim):
            return False
        return bool(np.array_equal(self.to_dense(), other.to_dense()))

    def __hash__(self):
        return hash((self.kind, self.out_dim, self.in_dim))

    def __repr__(self):
        return f"LinearMap({self.kind}, {self.out_dim}x{self.in_dim})"
