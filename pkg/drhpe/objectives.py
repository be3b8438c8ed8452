"""Problem model for min f(x) + g(y) s.t. Ax + By = b, and the two ADMM subproblem solvers.

Supported objective kinds:
    ProxFunction: l1, squared_l2, box (indicator), zero; solved by one prox call
    QuadraticFunction: 1/2 x'Px + q'x + r; solved through cached Cholesky factors

Every subproblem solve returns (point, witness) where witness is an explicit
element of the subdifferential at the point; downstream certification relies on it.
"""

from __future__ import annotations

import json
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from drhpe.errors import (
    DimensionMismatchError,
    DrhpeError,
    InstanceFormatError,
    SingularSystemError,
    SubproblemConfigurationError,
    UnsupportedFunctionError,
)
from drhpe.operators import BlockPoint, PsdOperator

NumpyArray = np.ndarray

PROX_KINDS = ("l1", "squared_l2", "box", "zero")
# max-entry tolerance when detecting A'A = nu I
SCALED_IDENTITY_TOL = 1e-10
KNOWN_SOLUTION_TOL = 1e-8
FACTOR_CACHE_SIZE = 8


@dataclass(frozen=True, eq=False)
class ProxFunction:
    """Convex function with a closed-form proximal map.

    Use the classmethod constructors.

    Properties:
        kind: one of "l1", "squared_l2", "box", "zero"
        dim: dimension of the domain
        weight: lambda of l1 (lambda |v|_1) or c of squared_l2 ((c/2)|v - center|^2)
        center: center of squared_l2
        lower, upper: bounds of the box indicator
    """

    kind: str
    dim: int
    weight: float = 0.0
    center: Optional[NumpyArray] = field(default=None, repr=False)
    lower: Optional[NumpyArray] = field(default=None, repr=False)
    upper: Optional[NumpyArray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in PROX_KINDS:
            raise UnsupportedFunctionError(f"unknown function kind {self.kind}")
        if self.weight < 0:
            raise ValueError(f"{self.kind} weight must be nonnegative, got {self.weight}")

    @classmethod
    def l1(cls, dim: int, weight: float = 1.0) -> ProxFunction:
        """weight * |v|_1"""
        return cls("l1", int(dim), float(weight))

    @classmethod
    def squared_l2(cls, dim: int, weight: float = 1.0, center=None) -> ProxFunction:
        """(weight / 2) |v - center|^2, center defaults to the origin."""
        center = np.zeros(dim) if center is None else np.array(center, dtype=float)
        if center.shape != (dim,):
            raise DimensionMismatchError(f"center shape {center.shape}, expected ({dim},)")
        center.setflags(write=False)
        return cls("squared_l2", int(dim), float(weight), center=center)

    @classmethod
    def box(cls, lower, upper) -> ProxFunction:
        """Indicator of {v: lower <= v <= upper}; lower == upper pins components."""
        lower = np.array(lower, dtype=float)
        upper = np.array(upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise DimensionMismatchError("box bounds must be vectors of equal length")
        if np.any(lower > upper):
            raise ValueError("box lower bound exceeds upper bound")
        lower.setflags(write=False)
        upper.setflags(write=False)
        return cls("box", lower.shape[0], lower=lower, upper=upper)

    @classmethod
    def zero(cls, dim: int) -> ProxFunction:
        """The zero function."""
        return cls("zero", int(dim))

    def _vector(self, v) -> NumpyArray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(f"{self.kind} expects ({self.dim},), got {v.shape}")
        return v

    def value(self, v) -> float:
        """Function value; inf outside the box for the indicator kind."""
        v = self._vector(v)
        if self.kind == "l1":
            return self.weight * float(np.abs(v).sum())
        if self.kind == "squared_l2":
            diff = v - self.center
            return 0.5 * self.weight * float(diff @ diff)
        if self.kind == "box":
            inside = np.all(v >= self.lower) and np.all(v <= self.upper)
            return 0.0 if inside else float("inf")
        return 0.0

    def prox(self, v, t: float) -> NumpyArray:
        """argmin_u f(u) + |u - v|^2 / (2t), t > 0."""
        if t <= 0:
            raise ValueError(f"prox step must be positive, got {t}")
        v = self._vector(v)
        if self.kind == "l1":
            return np.sign(v) * np.maximum(np.abs(v) - t * self.weight, 0.0)
        if self.kind == "squared_l2":
            tc = t * self.weight
            return (v + tc * self.center) / (1.0 + tc)
        if self.kind == "box":
            return np.clip(v, self.lower, self.upper)
        return np.array(v)

    def subgradient_distance(self, x, s, atol: float = 0.0) -> float:
        """Euclidean distance of s from the subdifferential of f at x.

        Args:
            x: point
            s: candidate subgradient
            atol: components within atol of a kink (0 for l1, a bound for box)
                are treated as sitting on it
        """
        x = self._vector(x)
        s = self._vector(s)
        if self.kind == "l1":
            lam = self.weight
            on_kink = np.abs(x) <= atol
            gaps = np.where(
                on_kink, np.maximum(np.abs(s) - lam, 0.0), np.abs(s - lam * np.sign(x))
            )
            return float(np.linalg.norm(gaps))
        if self.kind == "squared_l2":
            return float(np.linalg.norm(s - self.weight * (x - self.center)))
        if self.kind == "box":
            if np.any(x < self.lower - atol) or np.any(x > self.upper + atol):
                return float("inf")
            at_lower = x <= self.lower + atol
            at_upper = x >= self.upper - atol
            # normal cone: s <= 0 at an active lower bound, s >= 0 at an active upper bound
            gaps = np.abs(s)
            gaps = np.where(at_lower, np.maximum(s, 0.0), gaps)
            gaps = np.where(at_upper, np.maximum(-s, 0.0), gaps)
            gaps = np.where(at_lower & at_upper, 0.0, gaps)
            return float(np.linalg.norm(gaps))
        return float(np.linalg.norm(s))

    def as_quadratic(self) -> QuadraticFunction:
        """Exact quadratic form of the zero and squared_l2 kinds."""
        if self.kind == "zero":
            return QuadraticFunction(PsdOperator.zero(self.dim), np.zeros(self.dim), 0.0)
        if self.kind == "squared_l2":
            c = self.weight
            return QuadraticFunction(
                PsdOperator.identity(self.dim, c),
                -c * self.center,
                0.5 * c * float(self.center @ self.center),
            )
        raise UnsupportedFunctionError(f"{self.kind} has no quadratic form")

    def to_dict(self) -> Dict[str, Any]:
        """{kind, params} record of the instance file format."""
        params: Dict[str, Any] = {"dim": self.dim}
        if self.kind == "l1":
            params["weight"] = self.weight
        elif self.kind == "squared_l2":
            params.update(weight=self.weight, center=self.center.tolist())
        elif self.kind == "box":
            params.update(lower=self.lower.tolist(), upper=self.upper.tolist())
        return {"kind": self.kind, "params": params}


@dataclass(frozen=True, eq=False)
class QuadraticFunction:
    """1/2 x'Px + q'x + r with P PSD."""

    P: PsdOperator
    q: NumpyArray
    r: float = 0.0

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.shape != (self.P.dim,):
            raise DimensionMismatchError(f"q has shape {q.shape}, P has dim {self.P.dim}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", float(self.r))

    kind = "quadratic"

    @property
    def dim(self) -> int:
        return self.P.dim

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * self.P.quad(x) + float(self.q @ x) + self.r

    def gradient(self, x) -> NumpyArray:
        return self.P.apply(x) + self.q

    def subgradient_distance(self, x, s, atol: float = 0.0) -> float:
        """|s - grad(x)|; atol unused."""
        return float(np.linalg.norm(np.asarray(s, dtype=float) - self.gradient(x)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "quadratic",
            "params": {"P": self.P.to_dict(), "q": self.q.tolist(), "r": self.r},
        }


Objective = Union[ProxFunction, QuadraticFunction]


def function_from_dict(record: Dict[str, Any], dim: int) -> Objective:
    """Build an objective from its {kind, params} record."""
    kind = record["kind"]
    params = record.get("params", {})
    if kind == "quadratic":
        matrix = params["P"]
        if isinstance(matrix, dict):
            P = PsdOperator.from_dict(matrix)
        else:
            P = PsdOperator.dense(matrix)
        return QuadraticFunction(P, params.get("q", np.zeros(dim)), params.get("r", 0.0))
    if kind == "l1":
        return ProxFunction.l1(dim, params.get("weight", 1.0))
    if kind == "squared_l2":
        return ProxFunction.squared_l2(dim, params.get("weight", 1.0), params.get("center"))
    if kind == "box":
        return ProxFunction.box(params["lower"], params["upper"])
    if kind == "zero":
        return ProxFunction.zero(dim)
    raise UnsupportedFunctionError(f"unknown function kind {kind}")


@dataclass(frozen=True, eq=False)
class SeparableProblem:
    """min f(x) + g(y) subject to Ax + By = b.

    Properties:
        f, g: objectives on R^n and R^p
        A: m x n matrix
        B: m x p matrix
        b: right-hand side in R^m
        known_solution: optional KKT point (x*, y*, gamma*), verified on construction
        name: label used in logs and run records
        ata_scale, btb_scale: nu with A'A = nu I (resp. B'B), else None
    """

    f: Objective
    g: Objective
    A: NumpyArray
    B: NumpyArray
    b: NumpyArray
    known_solution: Optional[BlockPoint] = None
    name: str = "problem"
    ata_scale: Optional[float] = field(init=False, default=None)
    btb_scale: Optional[float] = field(init=False, default=None)
    _factors: OrderedDict = field(init=False, default_factory=OrderedDict, repr=False)
    _lock: Any = field(init=False, default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        b = np.array(self.b, dtype=float)
        if A.ndim != 2 or B.ndim != 2 or b.ndim != 1:
            raise DimensionMismatchError("A and B must be matrices and b a vector")
        if not A.shape[0] == B.shape[0] == b.shape[0]:
            raise DimensionMismatchError(
                f"row counts differ: A {A.shape}, B {B.shape}, b {b.shape}"
            )
        if self.f.dim != A.shape[1]:
            raise DimensionMismatchError(f"f has dim {self.f.dim}, A has {A.shape[1]} columns")
        if self.g.dim != B.shape[1]:
            raise DimensionMismatchError(f"g has dim {self.g.dim}, B has {B.shape[1]} columns")
        for name, array in (("A", A), ("B", B), ("b", b)):
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        object.__setattr__(
            self, "ata_scale", PsdOperator.gram(A).scaled_identity_value(SCALED_IDENTITY_TOL)
        )
        object.__setattr__(
            self, "btb_scale", PsdOperator.gram(B).scaled_identity_value(SCALED_IDENTITY_TOL)
        )
        if self.known_solution is not None:
            z = self.known_solution
            z.check_dims(self.n, self.p, self.m, "known_solution")
            residual = kkt_residual(self, z.x, z.y, z.gamma)
            if not residual <= KNOWN_SOLUTION_TOL:
                raise InstanceFormatError(
                    f"known_solution of {self.name} has KKT residual {residual:.3e}"
                )

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def constraint_residual(self, x, y) -> NumpyArray:
        """Ax + By - b"""
        return self.A @ x + self.B @ y - self.b

    def objective_value(self, x, y) -> float:
        return self.f.value(x) + self.g.value(y)

    def cached_factor(self, key: Tuple, build):
        """Cholesky factor of the matrix returned by build(), memoized under key."""
        with self._lock:
            if key in self._factors:
                self._factors.move_to_end(key)
                return self._factors[key]
        matrix = build()
        try:
            factor = linalg.cho_factor(matrix, check_finite=False)
        except linalg.LinAlgError as error:
            raise SingularSystemError(f"subproblem system is not positive definite: {error}")
        with self._lock:
            self._factors[key] = factor
            while len(self._factors) > FACTOR_CACHE_SIZE:
                self._factors.popitem(last=False)
        return factor


def _quadratic_form(func: Objective) -> Optional[QuadraticFunction]:
    if isinstance(func, QuadraticFunction):
        return func
    if func.kind in ("zero", "squared_l2"):
        return func.as_quadratic()
    return None


def _prox_scale(func: Objective, gram_scale: Optional[float], prox_op: PsdOperator):
    """(nu, r) if the prox strategy applies, else None."""
    if not isinstance(func, ProxFunction) or gram_scale is None:
        return None
    r_scale = prox_op.scaled_identity_value()
    if r_scale is None:
        return None
    return gram_scale, r_scale


def solve_x_subproblem(
    problem: SeparableProblem,
    gamma_hat,
    y_prev,
    x_hat,
    beta1: float,
    mu: float,
    R: PsdOperator,
) -> Tuple[NumpyArray, NumpyArray]:
    """Minimize f(x) - <gamma_hat, Ax> + beta1/2 |Ax + By_prev - b|^2 + (1+mu)/2 |x - x_hat|_R^2.

    Returns:
        (x, witness) with witness in the subdifferential of f at x

    Raises:
        SingularSystemError: quadratic system not positive definite
        SubproblemConfigurationError: no strategy applies to (f, A, R)
    """
    if beta1 <= 0 or mu <= 0:
        raise ValueError(f"beta1 and mu must be positive, got {beta1}, {mu}")
    A, B, b = problem.A, problem.B, problem.b
    shifted = B @ y_prev - b
    linear = A.T @ gamma_hat - beta1 * (A.T @ shifted)
    scales = _prox_scale(problem.f, problem.ata_scale, R)
    if scales is not None:
        nu, r_scale = scales
        kappa = beta1 * nu + (1.0 + mu) * r_scale
        if kappa <= 0:
            raise SubproblemConfigurationError(
                "x-subproblem prox step undefined: A'A = 0 and R = 0"
            )
        v = (linear + (1.0 + mu) * r_scale * np.asarray(x_hat, dtype=float)) / kappa
        x = problem.f.prox(v, 1.0 / kappa)
        return x, kappa * (v - x)
    quadratic = _quadratic_form(problem.f)
    if quadratic is None:
        raise SubproblemConfigurationError(
            f"x-subproblem: f of kind {problem.f.kind} needs A'A and R to be scaled identities"
            " (or a quadratic f)"
        )

    def build():
        return (
            quadratic.P.to_dense() + beta1 * (A.T @ A) + (1.0 + mu) * R.to_dense()
        )

    factor = problem.cached_factor(("x", beta1, mu, R), build)
    rhs = linear - quadratic.q + (1.0 + mu) * R.apply(x_hat)
    x = linalg.cho_solve(factor, rhs, check_finite=False)
    return x, quadratic.gradient(x)


def solve_y_subproblem(
    problem: SeparableProblem,
    u,
    x,
    y_hat,
    beta2: float,
    alpha: float,
    beta: float,
    S: PsdOperator,
) -> Tuple[NumpyArray, NumpyArray]:
    """Minimize over y

        g(y) - <u, By>
            + beta2/2 [|Ax + By - b|^2 + alpha |B(y - y_hat)|^2 + |y - y_hat|_S^2 / beta]

    Returns:
        (y, witness) with witness in the subdifferential of g at y

    Raises:
        SingularSystemError: quadratic system not positive definite
        SubproblemConfigurationError: no strategy applies to (g, B, S)
    """
    if beta2 <= 0 or beta <= 0:
        raise ValueError(f"beta2 and beta must be positive, got {beta2}, {beta}")
    A, B, b = problem.A, problem.B, problem.b
    y_hat = np.asarray(y_hat, dtype=float)
    shifted = A @ x - b
    linear = B.T @ u - beta2 * (B.T @ shifted)
    scales = _prox_scale(problem.g, problem.btb_scale, S)
    if scales is not None:
        nu, s_scale = scales
        kappa = beta2 * (1.0 + alpha) * nu + (beta2 / beta) * s_scale
        if kappa <= 0:
            raise SubproblemConfigurationError(
                "y-subproblem prox step undefined: B'B = 0 and S = 0"
            )
        v = (linear + (beta2 * alpha * nu + (beta2 / beta) * s_scale) * y_hat) / kappa
        y = problem.g.prox(v, 1.0 / kappa)
        return y, kappa * (v - y)
    quadratic = _quadratic_form(problem.g)
    if quadratic is None:
        raise SubproblemConfigurationError(
            f"y-subproblem: g of kind {problem.g.kind} needs B'B and S to be scaled identities"
            " (or a quadratic g)"
        )

    def build():
        return (
            quadratic.P.to_dense()
            + beta2 * (1.0 + alpha) * (B.T @ B)
            + (beta2 / beta) * S.to_dense()
        )

    factor = problem.cached_factor(("y", beta2, alpha, beta, S), build)
    rhs = (
        linear
        - quadratic.q
        + beta2 * alpha * (B.T @ (B @ y_hat))
        + (beta2 / beta) * S.apply(y_hat)
    )
    y = linalg.cho_solve(factor, rhs, check_finite=False)
    return y, quadratic.gradient(y)


def kkt_residual(problem: SeparableProblem, x, y, gamma, atol: float = 0.0) -> float:
    """max(dist(A'gamma, df(x)), dist(B'gamma, dg(y)), |Ax + By - b|)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (problem.m,):
        raise DimensionMismatchError(f"gamma has shape {gamma.shape}, expected ({problem.m},)")
    return max(
        problem.f.subgradient_distance(x, problem.A.T @ gamma, atol),
        problem.g.subgradient_distance(y, problem.B.T @ gamma, atol),
        float(np.linalg.norm(problem.constraint_residual(x, y))),
    )


def problem_to_dict(problem: SeparableProblem) -> Dict[str, Any]:
    """Serialize to the instance file layout."""
    record = {
        "name": problem.name,
        "n": problem.n,
        "p": problem.p,
        "m": problem.m,
        "f": problem.f.to_dict(),
        "g": problem.g.to_dict(),
        "A": problem.A.tolist(),
        "B": problem.B.tolist(),
        "b": problem.b.tolist(),
    }
    if problem.known_solution is not None:
        record["known_solution"] = problem.known_solution.to_dict()
    return record


def problem_from_dict(record: Dict[str, Any]) -> SeparableProblem:
    """Inverse of problem_to_dict.

    Raises:
        InstanceFormatError: missing fields or inconsistent dimensions
    """
    try:
        n, p, m = int(record["n"]), int(record["p"]), int(record["m"])
        A = np.array(record["A"], dtype=float).reshape(m, n)
        B = np.array(record["B"], dtype=float).reshape(m, p)
        known = record.get("known_solution")
        return SeparableProblem(
            f=function_from_dict(record["f"], n),
            g=function_from_dict(record["g"], p),
            A=A,
            B=B,
            b=record["b"],
            known_solution=BlockPoint.from_dict(known) if known else None,
            name=record.get("name", "problem"),
        )
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError, DrhpeError) as error:
        raise InstanceFormatError(f"invalid instance record: {error}") from error


def load_problem(path: str) -> SeparableProblem:
    """Read an instance JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as instance_file:
            record = json.load(instance_file)
    except (OSError, json.JSONDecodeError) as error:
        raise InstanceFormatError(f"cannot read instance {path}: {error}") from error
    return problem_from_dict(record)


def save_problem(problem: SeparableProblem, path: str):
    """Write an instance JSON file."""
    with open(path, "w", encoding="utf-8") as instance_file:
        json.dump(problem_to_dict(problem), instance_file)
