"""Positive semidefinite operator algebra, seminorms and the block metric Q.

Contains:
    PsdOperator: PSD operator in one of five structured representations
    BlockPoint: a primal-dual point (x, y, gamma) with vector-space arithmetic
    QMetric: the block-diagonal metric diag(R, (1 + alpha) beta B'B + S, I / (theta beta))
and the module level operations seminorm, q_apply and q_norm.

All objects are immutable after construction (arrays are stored read-only) and
can be shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from drhpe.errors import DimensionMismatchError, PsdViolationError

NumpyArray = np.ndarray

# radicands below -PSD_TOL * max(1, |v|^2) are reported as PSD violations
PSD_TOL = 1e-12
# tolerance (relative to the largest entry) for symmetry / PSD checks of dense input
STRUCTURE_TOL = 1e-10
# Gram products M'M are cached when the operator dimension is at most this
GRAM_CACHE_LIMIT = 2000

OPERATOR_KINDS = ("zero", "scaled_identity", "diagonal", "dense", "gram")


def _readonly(values, ndim: int) -> NumpyArray:
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise DimensionMismatchError(f"expected a {ndim}-d array, got shape {array.shape}")
    array.setflags(write=False)
    return array


def _vector(values, dim: int, name: str = "vector") -> NumpyArray:
    array = np.asarray(values, dtype=float)
    if array.shape != (dim,):
        raise DimensionMismatchError(f"{name} has shape {array.shape}, expected ({dim},)")
    return array


@dataclass(frozen=True, eq=False)
class PsdOperator:
    """Positive semidefinite linear operator on R^dim.

    Use the classmethod constructors rather than the raw dataclass fields.

    Properties:
        kind: one of "zero", "scaled_identity", "diagonal", "dense", "gram"
        dim: dimension of the domain
        scale: factor c of scaled_identity (c I) and gram (c M'M)
        data: diagonal vector, dense symmetric matrix or Gram factor M
    """

    kind: str
    dim: int
    scale: float = 1.0
    data: Optional[NumpyArray] = field(default=None, repr=False)
    _gram: Optional[NumpyArray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in OPERATOR_KINDS:
            raise ValueError(f"unknown operator kind {self.kind}")
        if self.dim < 1:
            raise DimensionMismatchError(f"operator dimension must be positive, got {self.dim}")
        if self.scale < 0:
            raise PsdViolationError(f"negative scale {self.scale} for {self.kind} operator")

    @classmethod
    def zero(cls, dim: int) -> PsdOperator:
        """The zero operator."""
        return cls("zero", int(dim), 0.0)

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> PsdOperator:
        """scale * I, scale >= 0."""
        return cls("scaled_identity", int(dim), float(scale))

    @classmethod
    def diagonal(cls, values) -> PsdOperator:
        """diag(values) for a nonnegative vector."""
        data = _readonly(values, 1)
        if np.any(data < 0):
            raise PsdViolationError(f"diagonal entries must be nonnegative, min {data.min()}")
        return cls("diagonal", data.shape[0], 1.0, data)

    @classmethod
    def dense(cls, matrix) -> PsdOperator:
        """Dense symmetric PSD matrix, checked on construction.

        Raises:
            DimensionMismatchError: matrix is not square
            PsdViolationError: matrix not symmetric or has a negative eigenvalue
        """
        data = np.array(matrix, dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise DimensionMismatchError(f"dense operator needs a square matrix, got {data.shape}")
        size = max(1.0, float(np.abs(data).max(initial=0.0)))
        if np.abs(data - data.T).max(initial=0.0) > STRUCTURE_TOL * size:
            raise PsdViolationError("dense operator matrix is not symmetric")
        data = 0.5 * (data + data.T)
        min_eig = float(linalg.eigvalsh(data).min())
        if min_eig < -STRUCTURE_TOL * size:
            raise PsdViolationError(f"dense operator has eigenvalue {min_eig:.3e} < 0")
        data.setflags(write=False)
        return cls("dense", data.shape[0], 1.0, data)

    @classmethod
    def gram(cls, factor, scale: float = 1.0) -> PsdOperator:
        """scale * M'M for a stored factor M, with M'M cached for moderate dimension."""
        data = _readonly(factor, 2)
        gram = None
        if data.shape[1] <= GRAM_CACHE_LIMIT:
            gram = data.T @ data
            gram.setflags(write=False)
        return cls("gram", data.shape[1], float(scale), data, gram)

    def apply(self, v) -> NumpyArray:
        """Return H v."""
        v = _vector(v, self.dim)
        if self.kind == "zero":
            return np.zeros(self.dim)
        if self.kind == "scaled_identity":
            return self.scale * v
        if self.kind == "diagonal":
            return self.data * v
        if self.kind == "dense":
            return self.data @ v
        if self._gram is not None:
            return self.scale * (self._gram @ v)
        return self.scale * (self.data.T @ (self.data @ v))

    def quad(self, v) -> float:
        """Return the quadratic form v' H v."""
        v = _vector(v, self.dim)
        if self.kind == "gram" and self._gram is None:
            mv = self.data @ v
            return self.scale * float(mv @ mv)
        return float(v @ self.apply(v))

    def norm(self, v) -> float:
        """Seminorm induced by this operator."""
        return seminorm(self, v)

    def to_dense(self) -> NumpyArray:
        """Assemble the operator as a dense matrix."""
        if self.kind == "zero":
            return np.zeros((self.dim, self.dim))
        if self.kind == "scaled_identity":
            return self.scale * np.eye(self.dim)
        if self.kind == "diagonal":
            return np.diag(self.data)
        if self.kind == "dense":
            return np.array(self.data)
        if self._gram is not None:
            return self.scale * np.array(self._gram)
        return self.scale * (self.data.T @ self.data)

    def scaled_identity_value(self, tol: float = STRUCTURE_TOL) -> Optional[float]:
        """Return nu if the operator equals nu * I within tol (max-entry), else None."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "scaled_identity":
            return self.scale
        if self.kind == "diagonal":
            if self.data.max() - self.data.min() <= tol:
                return float(self.data.mean())
            return None
        matrix = self.to_dense()
        nu = float(np.trace(matrix)) / self.dim
        if np.abs(matrix - nu * np.eye(self.dim)).max() <= tol:
            return nu
        return None

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the dense assembly."""
        return float(linalg.eigvalsh(self.to_dense()).min())

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready description."""
        record = {"kind": self.kind, "dim": self.dim, "scale": self.scale}
        if self.data is not None:
            record["data"] = self.data.tolist()
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> PsdOperator:
        """Inverse of to_dict."""
        kind = record["kind"]
        if kind == "zero":
            return cls.zero(record["dim"])
        if kind == "scaled_identity":
            return cls.identity(record["dim"], record.get("scale", 1.0))
        if kind == "diagonal":
            return cls.diagonal(record["data"])
        if kind == "dense":
            return cls.dense(record["data"])
        if kind == "gram":
            return cls.gram(record["data"], record.get("scale", 1.0))
        raise ValueError(f"unknown operator kind {kind}")


@dataclass(frozen=True, eq=False)
class BlockPoint:
    """A point z = (x, y, gamma) of R^n x R^p x R^m.

    Supports +, -, negation, scalar multiplication and the Euclidean inner
    product so that generic framework code can treat it like a vector.
    """

    x: NumpyArray
    y: NumpyArray
    gamma: NumpyArray

    def __post_init__(self):
        for name in ("x", "y", "gamma"):
            object.__setattr__(self, name, _readonly(getattr(self, name), 1))

    @classmethod
    def zeros(cls, n: int, p: int, m: int) -> BlockPoint:
        """The origin of R^n x R^p x R^m."""
        return cls(np.zeros(n), np.zeros(p), np.zeros(m))

    @classmethod
    def from_flat(cls, values, n: int, p: int, m: int) -> BlockPoint:
        """Split a stacked vector into blocks."""
        values = _vector(values, n + p + m, "stacked point")
        return cls(values[:n], values[n : n + p], values[n + p :])

    @property
    def dims(self) -> Tuple[int, int, int]:
        """(n, p, m)"""
        return self.x.shape[0], self.y.shape[0], self.gamma.shape[0]

    def check_dims(self, n: int, p: int, m: int, name: str = "point"):
        """Raise DimensionMismatchError unless dims == (n, p, m)."""
        if self.dims != (n, p, m):
            raise DimensionMismatchError(f"{name} has dims {self.dims}, expected {(n, p, m)}")

    def flat(self) -> NumpyArray:
        """Stacked vector (x, y, gamma)."""
        return np.concatenate([self.x, self.y, self.gamma])

    def _same_shape(self, other: BlockPoint):
        if not isinstance(other, BlockPoint) or other.dims != self.dims:
            raise DimensionMismatchError("block points with different dimensions")

    def __add__(self, other: BlockPoint) -> BlockPoint:
        self._same_shape(other)
        return BlockPoint(self.x + other.x, self.y + other.y, self.gamma + other.gamma)

    def __sub__(self, other: BlockPoint) -> BlockPoint:
        self._same_shape(other)
        return BlockPoint(self.x - other.x, self.y - other.y, self.gamma - other.gamma)

    def __mul__(self, scalar: float) -> BlockPoint:
        return BlockPoint(scalar * self.x, scalar * self.y, scalar * self.gamma)

    __rmul__ = __mul__

    def __neg__(self) -> BlockPoint:
        return BlockPoint(-self.x, -self.y, -self.gamma)

    def dot(self, other: BlockPoint) -> float:
        """Euclidean inner product of the stacked vectors."""
        self._same_shape(other)
        return float(self.x @ other.x + self.y @ other.y + self.gamma @ other.gamma)

    def max_abs(self) -> float:
        """Largest absolute entry over all blocks."""
        return float(np.abs(self.flat()).max(initial=0.0))

    def equals(self, other: BlockPoint) -> bool:
        """Exact (bitwise value) equality of all blocks."""
        return (
            self.dims == other.dims
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.gamma, other.gamma)
        )

    def to_dict(self) -> Dict[str, list]:
        """JSON-ready {x, y, gamma} lists."""
        return {"x": self.x.tolist(), "y": self.y.tolist(), "gamma": self.gamma.tolist()}

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> BlockPoint:
        """Inverse of to_dict."""
        return cls(record["x"], record["y"], record["gamma"])


@dataclass(frozen=True, eq=False)
class QMetric:
    """Block metric Q = diag(R, (1 + alpha) beta B'B + S, (theta beta)^-1 I).

    Stored by blocks; nothing depending on the regularization mu lives here so the
    same metric serves every cycle.

    Properties:
        R: PSD operator on R^n
        S: PSD operator on R^p
        B: constraint matrix (m x p)
        alpha: proximal factor, >= 0
        beta: penalty, > 0
        theta: stepsize, > 0
    """

    R: PsdOperator
    S: PsdOperator
    B: NumpyArray
    alpha: float
    beta: float
    theta: float
    btb: PsdOperator = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "B", _readonly(self.B, 2))
        if self.S.dim != self.B.shape[1]:
            raise DimensionMismatchError(
                f"S has dim {self.S.dim} but B has {self.B.shape[1]} columns"
            )
        if self.alpha < 0 or self.beta <= 0 or self.theta <= 0:
            raise PsdViolationError(
                f"metric needs alpha >= 0, beta > 0, theta > 0; got "
                f"{self.alpha}, {self.beta}, {self.theta}"
            )
        object.__setattr__(self, "btb", PsdOperator.gram(self.B))

    @property
    def n(self) -> int:
        return self.R.dim

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def gamma_weight(self) -> float:
        """(theta beta)^-1"""
        return 1.0 / (self.theta * self.beta)

    def _check(self, z: BlockPoint):
        z.check_dims(self.n, self.p, self.m)

    def y_apply(self, y) -> NumpyArray:
        """((1 + alpha) beta B'B + S) y"""
        return (1.0 + self.alpha) * self.beta * self.btb.apply(y) + self.S.apply(y)

    def apply(self, z: BlockPoint) -> BlockPoint:
        """Q z"""
        self._check(z)
        return BlockPoint(self.R.apply(z.x), self.y_apply(z.y), self.gamma_weight * z.gamma)

    def norm_sq(self, z: BlockPoint) -> float:
        """|x|_R^2 + (1 + alpha) beta |B y|^2 + |y|_S^2 + |gamma|^2 / (beta theta)"""
        self._check(z)
        b_y = self.B @ z.y
        return (
            self.R.quad(z.x)
            + (1.0 + self.alpha) * self.beta * float(b_y @ b_y)
            + self.S.quad(z.y)
            + self.gamma_weight * float(z.gamma @ z.gamma)
        )

    def norm(self, z: BlockPoint) -> float:
        """Q-seminorm of z."""
        radicand = self.norm_sq(z)
        if radicand < 0:
            if radicand < -PSD_TOL * max(1.0, float(z.flat() @ z.flat())):
                raise PsdViolationError(f"negative Q radicand {radicand:.3e}")
            return 0.0
        return sqrt(radicand)

    def proximal_y_sq(self, dy) -> float:
        """|dy|^2 in the metric alpha beta B'B + S."""
        b_dy = self.B @ np.asarray(dy, dtype=float)
        return self.alpha * self.beta * float(b_dy @ b_dy) + self.S.quad(dy)

    def to_dense(self) -> NumpyArray:
        """Dense assembly of Q, for verification on small problems."""
        y_block = (1.0 + self.alpha) * self.beta * self.btb.to_dense() + self.S.to_dense()
        return linalg.block_diag(
            self.R.to_dense(), y_block, self.gamma_weight * np.eye(self.m)
        )


def seminorm(operator: PsdOperator, v) -> float:
    """Seminorm sqrt(v' H v) induced by a PSD operator.

    Raises:
        DimensionMismatchError: dim(v) != dim(H)
        PsdViolationError: v' H v < -1e-12 max(1, |v|^2)
    """
    v = _vector(v, operator.dim)
    radicand = operator.quad(v)
    if radicand < 0:
        if radicand < -PSD_TOL * max(1.0, float(v @ v)):
            raise PsdViolationError(f"negative radicand {radicand:.3e} in seminorm")
        return 0.0
    return sqrt(radicand)


def q_apply(metric: QMetric, z: BlockPoint) -> BlockPoint:
    """Return (R x, ((1 + alpha) beta B'B + S) y, gamma / (theta beta))."""
    return metric.apply(z)


def q_norm(metric: QMetric, z: BlockPoint) -> float:
    """Q-seminorm of a block point."""
    return metric.norm(z)
