"""Dynamic regularized hybrid proximal extragradient (HPE) framework.

The framework drives a step oracle on the regularized inclusion
0 in T(z) + mu M (z - z0): within a cycle mu is fixed and the oracle is called
until |z_{k-1} - z_k|_M <= rho / 2; the cycle then either certifies
v = z_{k-1} - z_k - mu (z~_k - z0) with |v|_M <= rho or halves mu and starts the
next cycle. An exact proximal oracle for affine monotone operators is included.
"""

from dataclasses import dataclass, field
from typing import Any, List, Optional, Protocol

import numpy as np
from pydantic import Field, validator
from pydantic.dataclasses import dataclass as pydantic_dataclass
from scipy import linalg

from drhpe.config import ConfigItem
from drhpe.errors import NonConvergenceError, PsdViolationError, SingularSystemError
from drhpe.logger import Logger
from drhpe.operators import STRUCTURE_TOL, PsdOperator

NumpyArray = np.ndarray
RELDIST_TOL = 1e-10


@pydantic_dataclass(frozen=True)
class HpeParams(ConfigItem):
    """Framework parameters

    eta0, sigma and tau describe the error contract the oracle promises for
    each step (eta_k, |z_tilde - z| bounds); hpe_run does not enforce them.
    drhpe.certify checks recorded DR-ADMM steps against the same contract.

    Properties:
        eta0: initial error budget, >= 0
        sigma: relative error factor in [0, 1)
        tau: error budget decay in (0, 1)
        rho: tolerance, > 0
        mu0: initial regularization, fixed at 1
        max_cycles: cycle limit (mu underflow guard)
        max_inner_iters: limit on the total number of oracle calls
        warm_start: start a new cycle from the last iterate instead of z0
        record_history: keep every step in HpeOutput.history
    """

    eta0: float = Field(default=0.0, ge=0)
    sigma: float = Field(default=0.0, ge=0, lt=1)
    tau: float = Field(default=0.5, gt=0, lt=1)
    rho: float = Field(default=1e-6, gt=0)
    mu0: float = Field(default=1.0)
    max_cycles: int = Field(default=60, ge=1)
    max_inner_iters: int = Field(default=1_000_000, ge=1)
    warm_start: bool = Field(default=True)
    record_history: bool = Field(default=False)

    @validator("mu0")
    def mu0_is_one(cls, value):
        """The framework starts every run at mu = 1"""
        assert value == 1.0, "initial regularization must be 1"
        return value


@dataclass(frozen=True)
class StepResult:
    """(z_k, z~_k, eta_k) produced by one oracle call."""

    z: Any
    z_tilde: Any
    eta: float = 0.0


class StepOracle(Protocol):
    """Produces (z_k, z~_k, eta_k) for the regularized inclusion.

    The claim that the result satisfies the inclusion and error condition is
    checked by drhpe.certify, not trusted here.
    """

    def produce(self, z_prev, mu: float, z0) -> StepResult:
        ...


@dataclass(frozen=True)
class HpeStep:
    """History entry for one oracle call."""

    cycle: int
    k: int
    mu: float
    z_prev: Any
    z: Any
    z_tilde: Any
    eta: float


@dataclass
class HpeOutput:
    """Framework output

    Properties:
        z_tilde: certified point
        v: residual with M v in T(z_tilde) (up to the oracle's accuracy)
        z: last iterate z_k
        residual: |v|_M
        cycles: number of cycles run
        total_iters: oracle calls over all cycles
        cycle_iters: oracle calls per cycle
        mu: regularization of the final cycle
        history: every step when record_history is set
    """

    z_tilde: Any
    v: Any
    z: Any
    residual: float
    cycles: int
    total_iters: int
    cycle_iters: List[int]
    mu: float
    history: List[HpeStep] = field(default_factory=list)


def hpe_run(
    oracle: StepOracle,
    z0,
    M,
    params: HpeParams,
    logger: Optional[Logger] = None,
) -> HpeOutput:
    """Run the dynamic regularized HPE framework.

    Args:
        oracle: step oracle
        z0: regularization center and initial point
        M: metric exposing norm(point); a PsdOperator or a QMetric
        params: framework parameters
        logger: optional logger, per-cycle records at DEBUG

    Returns:
        HpeOutput with |v|_M <= rho

    Raises:
        NonConvergenceError: max_inner_iters or max_cycles exceeded; the
            error's trace holds the history recorded so far
    """
    logger = logger or Logger.quiet()
    history: List[HpeStep] = []
    cycle_iters: List[int] = []
    mu = params.mu0
    z_prev = z0
    cycle = 1
    total = 0
    while True:
        k = 0
        while True:
            if total >= params.max_inner_iters:
                raise NonConvergenceError(
                    f"framework exceeded {params.max_inner_iters} steps in cycle {cycle}",
                    trace=history,
                    iterations=total,
                )
            step = oracle.produce(z_prev, mu, z0)
            k += 1
            total += 1
            if params.record_history:
                history.append(
                    HpeStep(cycle, k, mu, z_prev, step.z, step.z_tilde, step.eta)
                )
            delta = z_prev - step.z
            if M.norm(delta) <= params.rho / 2:
                break
            z_prev = step.z
        v = delta - mu * (step.z_tilde - z0)
        residual = M.norm(v)
        cycle_iters.append(k)
        logger.log_time(
            f"cycle {cycle}: mu={mu:.3e} steps={k} residual={residual:.3e}", level="DEBUG"
        )
        if residual <= params.rho:
            return HpeOutput(
                z_tilde=step.z_tilde,
                v=v,
                z=step.z,
                residual=residual,
                cycles=cycle,
                total_iters=total,
                cycle_iters=cycle_iters,
                mu=mu,
                history=history,
            )
        if cycle >= params.max_cycles:
            raise NonConvergenceError(
                f"framework exceeded {params.max_cycles} cycles, residual {residual:.3e}",
                trace=history,
                iterations=total,
            )
        mu = mu / 2
        cycle += 1
        z_prev = step.z if params.warm_start else z0


class AffineOperator:
    """Affine monotone map T(z) = G z + h.

    Args:
        G: square matrix with G + G' PSD
        h: offset vector
    """

    def __init__(self, G, h):
        self.G = np.array(G, dtype=float)
        self.h = np.array(h, dtype=float)
        if self.G.ndim != 2 or self.G.shape[0] != self.G.shape[1]:
            raise ValueError(f"G must be square, got {self.G.shape}")
        if self.h.shape != (self.G.shape[0],):
            raise ValueError(f"h has shape {self.h.shape}, expected ({self.G.shape[0]},)")
        symmetric_part = 0.5 * (self.G + self.G.T)
        scale = max(1.0, float(np.abs(self.G).max(initial=0.0)))
        if linalg.eigvalsh(symmetric_part).min() < -STRUCTURE_TOL * scale:
            raise PsdViolationError("affine operator is not monotone (G + G' not PSD)")

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def __call__(self, z) -> NumpyArray:
        return self.G @ np.asarray(z, dtype=float) + self.h

    def zeros(self) -> NumpyArray:
        """A point of T^-1(0) (minimum norm least squares solution).

        Raises:
            SingularSystemError: G z = -h is inconsistent
        """
        z, *_ = linalg.lstsq(self.G, -self.h)
        residual = float(np.linalg.norm(self(z)))
        if residual > RELDIST_TOL * (1.0 + float(np.linalg.norm(self.h))):
            raise SingularSystemError(f"T(z) = 0 has no solution, residual {residual:.3e}")
        return z


def _solve(matrix: NumpyArray, rhs: NumpyArray) -> NumpyArray:
    try:
        return linalg.solve(matrix, rhs)
    except linalg.LinAlgError as error:
        raise SingularSystemError(f"singular regularized system: {error}")


class AffineProximalOracle:
    """Exact proximal step for an affine operator: z_k = z~_k, eta_k = 0.

    Solves 0 = T(z) + mu M (z - z0) + M (z - z_prev).
    """

    def __init__(self, T: AffineOperator, M: PsdOperator):
        if M.dim != T.dim:
            raise ValueError(f"metric dim {M.dim} does not match operator dim {T.dim}")
        self.T = T
        self.M = M
        self._dense_metric = M.to_dense()

    def produce(self, z_prev, mu: float, z0) -> StepResult:
        matrix = self.T.G + (1.0 + mu) * self._dense_metric
        rhs = self.M.apply(z_prev) + mu * self.M.apply(z0) - self.T.h
        z = _solve(matrix, rhs)
        return StepResult(z, z, 0.0)


def regularized_solution_affine(T: AffineOperator, z0, mu: float, M: PsdOperator) -> NumpyArray:
    """The unique z with 0 = T(z) + mu M (z - z0), i.e. (G + mu M) z = mu M z0 - h."""
    matrix = T.G + mu * M.to_dense()
    return _solve(matrix, mu * M.apply(z0) - T.h)


def check_reldist(T: AffineOperator, z0, mu: float, M: PsdOperator) -> bool:
    """|z0 - z_mu|_M <= |z0 - z_bar|_M + 1e-10 for z_mu regularized and z_bar in T^-1(0)."""
    z0 = np.asarray(z0, dtype=float)
    z_mu = regularized_solution_affine(T, z0, mu, M)
    z_bar = T.zeros()
    return M.norm(z0 - z_mu) <= M.norm(z0 - z_bar) + RELDIST_TOL
