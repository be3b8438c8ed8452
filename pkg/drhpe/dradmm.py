"""Dynamic regularized ADMM with over-relaxed stepsize.

Solves min f(x) + g(y) s.t. Ax + By = b. Each cycle runs ADMM iterations on
the problem regularized around z0 with weight mu until the Q-norm of the step
drops below rho / 2, then either certifies the residual (v^x, v^y, v^gamma)
or halves mu.

The iteration is an instance of the HPE framework in drhpe.hpe with metric Q
(see DrAdmmOracle); run() and hpe_run() with the oracle use the same
arithmetic and produce identical iterates.
"""

from collections import deque
from dataclasses import dataclass
from math import sqrt
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import Field
from pydantic.dataclasses import dataclass as pydantic_dataclass

from drhpe.config import ConfigItem
from drhpe.errors import (
    DimensionMismatchError,
    InvalidPenaltyError,
    InvalidProximalFactorError,
    InvalidToleranceError,
    NonConvergenceError,
    StepsizeOutOfDomainError,
    SubproblemConfigurationError,
)
from drhpe.hpe import HpeParams, StepResult
from drhpe.logger import Logger
from drhpe.objectives import (
    ProxFunction,
    QuadraticFunction,
    SeparableProblem,
    solve_x_subproblem,
    solve_y_subproblem,
)
from drhpe.operators import BlockPoint, PsdOperator, QMetric
from drhpe.tools import parse_rs

NumpyArray = np.ndarray

TRACE_FULL_LIMIT = 100_000
TRACE_WINDOW = 1_000
TRACE_STRIDE = 100


class _ArbitraryTypes:
    arbitrary_types_allowed = True


@pydantic_dataclass(frozen=True, config=_ArbitraryTypes)
class DrAdmmConfig(ConfigItem):
    """DR-ADMM run parameters

    Range checks of beta, theta, alpha and rho are done by validate_config so
    that each violated condition gets its own error.

    Properties:
        beta: penalty
        theta: stepsize
        alpha: proximal factor
        rho: tolerance
        R: PSD operator on R^n, defaults to zero
        S: PSD operator on R^p, defaults to zero
        z0: initial point and regularization center, defaults to the origin
        max_cycles: cycle limit
        max_inner_iters: iteration limit over all cycles
        trace_enabled: collect IterateRecords in the returned IterateTrace
        warm_start: start a new cycle from the last iterate instead of z0
    """

    beta: float = Field(default=1.0)
    theta: float = Field(default=1.6)
    alpha: float = Field(default=10.0)
    rho: float = Field(default=1e-6)
    R: Optional[PsdOperator] = Field(default=None)
    S: Optional[PsdOperator] = Field(default=None)
    z0: Optional[BlockPoint] = Field(default=None)
    max_cycles: int = Field(default=60, ge=1)
    max_inner_iters: int = Field(default=1_000_000, ge=1)
    trace_enabled: bool = Field(default=False)
    warm_start: bool = Field(default=True)

    def blocks(self, problem: SeparableProblem) -> Tuple[PsdOperator, PsdOperator, BlockPoint]:
        """(R, S, z0) with defaults filled in for the problem's dimensions."""
        R = self.R if self.R is not None else PsdOperator.zero(problem.n)
        S = self.S if self.S is not None else PsdOperator.zero(problem.p)
        z0 = self.z0 if self.z0 is not None else BlockPoint.zeros(problem.n, problem.p, problem.m)
        return R, S, z0


def stepsize_upper_bound(alpha: float) -> float:
    """(1 - alpha + sqrt(alpha^2 + 6 alpha + 5)) / 2; tends to 2 as alpha grows."""
    return (1.0 - alpha + sqrt(alpha * alpha + 6.0 * alpha + 5.0)) / 2.0


def validate_parameters(beta: float, theta: float, alpha: float, rho: float):
    """Check the scalar hypotheses of the method.

    Raises:
        InvalidPenaltyError: beta <= 0
        InvalidToleranceError: rho <= 0
        InvalidProximalFactorError: alpha < 0
        StepsizeOutOfDomainError: theta outside (0, stepsize_upper_bound(alpha))
    """
    if not beta > 0:
        raise InvalidPenaltyError(f"penalty beta must be positive, got {beta}")
    if not rho > 0:
        raise InvalidToleranceError(f"tolerance rho must be positive, got {rho}")
    if not alpha >= 0:
        raise InvalidProximalFactorError(f"proximal factor alpha must be >= 0, got {alpha}")
    bound = stepsize_upper_bound(alpha)
    if not 0 < theta < bound:
        raise StepsizeOutOfDomainError(
            f"stepsize theta={theta} outside (0, {bound:.6f}) for alpha={alpha}"
        )


def validate_config(cfg: DrAdmmConfig, problem: SeparableProblem):
    """Check the algorithm hypotheses for a run on problem.

    Raises:
        ConfigError subclasses: see validate_parameters
        DimensionMismatchError: R, S or z0 do not fit the problem
    """
    validate_parameters(cfg.beta, cfg.theta, cfg.alpha, cfg.rho)
    R, S, z0 = cfg.blocks(problem)
    if R.dim != problem.n:
        raise DimensionMismatchError(f"R has dim {R.dim}, problem has n={problem.n}")
    if S.dim != problem.p:
        raise DimensionMismatchError(f"S has dim {S.dim}, problem has p={problem.p}")
    z0.check_dims(problem.n, problem.p, problem.m, "z0")


def build_metric(problem: SeparableProblem, cfg: DrAdmmConfig) -> QMetric:
    """Q = diag(R, (1 + alpha) beta B'B + S, I / (theta beta)) for the run."""
    R, S, _ = cfg.blocks(problem)
    return QMetric(R, S, problem.B, cfg.alpha, cfg.beta, cfg.theta)


def _fallback_scale(matrix: NumpyArray) -> float:
    return max(float(np.linalg.norm(matrix, 2)) ** 2, 1.0)


def _needs_proximal_term(func, gram: NumpyArray, gram_scale: Optional[float]) -> bool:
    """True if the block system is singular without a proximal term."""
    if isinstance(func, ProxFunction) and gram_scale is not None:
        return gram_scale <= 0
    if isinstance(func, QuadraticFunction):
        hessian = func.P.to_dense()
    elif func.kind in ("zero", "squared_l2"):
        hessian = func.as_quadratic().P.to_dense()
    else:
        raise SubproblemConfigurationError(
            f"no subproblem strategy for {func.kind} when the constraint Gram matrix is not a"
            " scaled identity"
        )
    size = max(1.0, float(np.abs(hessian + gram).max(initial=0.0)))
    return float(np.linalg.eigvalsh(hessian + gram).min()) <= 1e-12 * size


def default_rs_blocks(problem: SeparableProblem, rs: str) -> Tuple[PsdOperator, PsdOperator]:
    """R and S for a strategy string.

    Args:
        problem: the instance
        rs: "zero", "scaled:r,s" (R = r I, S = s I) or "auto" (zero where the
            subproblem is solvable without a proximal term, else |A|^2 I or |B|^2 I)

    Raises:
        SubproblemConfigurationError: auto finds no strategy for a block
    """
    kind, r_scale, s_scale = parse_rs(rs)
    if kind == "zero":
        return PsdOperator.zero(problem.n), PsdOperator.zero(problem.p)
    if kind == "scaled":
        return PsdOperator.identity(problem.n, r_scale), PsdOperator.identity(problem.p, s_scale)
    A, B = problem.A, problem.B
    R = PsdOperator.zero(problem.n)
    S = PsdOperator.zero(problem.p)
    if _needs_proximal_term(problem.f, A.T @ A, problem.ata_scale):
        R = PsdOperator.identity(problem.n, _fallback_scale(A))
    if _needs_proximal_term(problem.g, B.T @ B, problem.btb_scale):
        S = PsdOperator.identity(problem.p, _fallback_scale(B))
    return R, S


def cycle_constants(beta: float, theta: float, mu: float) -> Tuple[float, float]:
    """(beta_1, beta_2) = (theta beta / (theta + mu), beta (1 + mu)).

    beta_1 carries the theta factor so that the predicted multiplier satisfies
    gamma~_k - gamma_{k-1} = -beta B dy_k - dgamma_k / theta; for mu -> 0 it is
    the classical penalty beta.
    """
    if beta <= 0 or theta <= 0 or mu <= 0:
        raise ValueError(f"beta, theta and mu must be positive, got {beta}, {theta}, {mu}")
    return theta * beta / (theta + mu), beta * (1.0 + mu)


def hat_points(
    z_prev: BlockPoint, z0: BlockPoint, mu: float, theta: float
) -> Tuple[NumpyArray, NumpyArray, NumpyArray]:
    """Convex combinations of the previous iterate and the regularization center."""
    x_hat = (z_prev.x + mu * z0.x) / (1.0 + mu)
    y_hat = (z_prev.y + mu * z0.y) / (1.0 + mu)
    gamma_hat = (theta * z_prev.gamma + mu * z0.gamma) / (theta + mu)
    return x_hat, y_hat, gamma_hat


def predict_multiplier(
    gamma_hat, x_k, y_prev, y_hat, beta1: float, beta2: float, A, B, b
) -> Tuple[NumpyArray, NumpyArray]:
    """(gamma~_k, u_k), available before the y-subproblem."""
    gamma_tilde = gamma_hat - beta1 * (A @ x_k + B @ y_prev - b)
    u = gamma_tilde + beta2 * (A @ x_k + B @ y_hat - b)
    return gamma_tilde, u


def correct_multiplier(
    gamma_tilde, x_k, y_k, gamma_prev, gamma0, beta: float, theta: float, mu: float, A, B, b
) -> NumpyArray:
    """Corrected multiplier.

    gamma_k = gamma_{k-1} - theta beta [Ax_k + By_k - b + mu (gamma~_k - gamma_0) / (beta theta)]
    """
    return gamma_prev - theta * beta * (
        A @ x_k + B @ y_k - b + mu * (gamma_tilde - gamma0) / (beta * theta)
    )


def multiplier_updates(
    gamma_hat,
    x_k,
    y_prev,
    y_k,
    y_hat,
    gamma_prev,
    gamma0,
    beta1: float,
    beta2: float,
    beta: float,
    theta: float,
    mu: float,
    A,
    B,
    b,
) -> Tuple[NumpyArray, NumpyArray, NumpyArray]:
    """(gamma~_k, u_k, gamma_k) for a completed iteration."""
    gamma_tilde, u = predict_multiplier(gamma_hat, x_k, y_prev, y_hat, beta1, beta2, A, B, b)
    gamma = correct_multiplier(gamma_tilde, x_k, y_k, gamma_prev, gamma0, beta, theta, mu, A, B, b)
    return gamma_tilde, u, gamma


def inner_stop(dx, dy, dgamma, metric: QMetric, rho: float) -> bool:
    """|(dx, dy, dgamma)|_Q <= rho / 2"""
    return metric.norm(BlockPoint(dx, dy, dgamma)) <= rho / 2


def outer_residuals(
    dx, dy, dgamma, x_k, y_k, gamma_tilde, z0: BlockPoint, mu: float
) -> Tuple[NumpyArray, NumpyArray, NumpyArray]:
    """(v^x, v^y, v^gamma) = dz_k - mu (z~_k - z0)."""
    vx = dx - mu * (x_k - z0.x)
    vy = dy - mu * (y_k - z0.y)
    vgamma = dgamma - mu * (gamma_tilde - z0.gamma)
    return vx, vy, vgamma


@dataclass(frozen=True)
class IterateRecord:
    """Everything one iteration computes.

    index is the 1-based iteration count over the whole run, k the count within
    the cycle. Deltas are z_{k-1} - z_k.
    """

    index: int
    cycle: int
    k: int
    mu: float
    beta1: float
    beta2: float
    x_hat: NumpyArray
    y_hat: NumpyArray
    gamma_hat: NumpyArray
    x: NumpyArray
    y: NumpyArray
    gamma: NumpyArray
    gamma_tilde: NumpyArray
    u: NumpyArray
    dx: NumpyArray
    dy: NumpyArray
    dgamma: NumpyArray
    f_witness: Optional[NumpyArray]
    g_witness: Optional[NumpyArray]

    @property
    def z(self) -> BlockPoint:
        return BlockPoint(self.x, self.y, self.gamma)

    @property
    def z_tilde(self) -> BlockPoint:
        return BlockPoint(self.x, self.y, self.gamma_tilde)

    @property
    def delta(self) -> BlockPoint:
        return BlockPoint(self.dx, self.dy, self.dgamma)

    @property
    def z_prev(self) -> BlockPoint:
        """z_{k-1} reconstructed as z_k + dz_k."""
        return BlockPoint(self.x + self.dx, self.y + self.dy, self.gamma + self.dgamma)

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {}
        for name, value in self.__dict__.items():
            record[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "IterateRecord":
        values = {}
        for name in cls.__dataclass_fields__:
            value = record.get(name)
            values[name] = np.array(value, dtype=float) if isinstance(value, list) else value
        return cls(**values)


class IterateTrace:
    """Bounded store of IterateRecords.

    Up to full_limit records are kept. Beyond that the trace keeps the last
    `window` records plus every `stride`-th older record (by index).
    """

    def __init__(
        self,
        full_limit: int = TRACE_FULL_LIMIT,
        window: int = TRACE_WINDOW,
        stride: int = TRACE_STRIDE,
    ):
        self.full_limit = full_limit
        self.stride = stride
        self.count = 0
        self._full: List[IterateRecord] = []
        self._sampled: List[IterateRecord] = []
        self._window: deque = deque(maxlen=window)
        self._thinned = False

    def append(self, record: IterateRecord):
        self.count += 1
        if not self._thinned:
            self._full.append(record)
            if len(self._full) > self.full_limit:
                self._thin()
            return
        if len(self._window) == self._window.maxlen:
            evicted = self._window[0]
            if evicted.index % self.stride == 0:
                self._sampled.append(evicted)
        self._window.append(record)

    def _thin(self):
        cut = len(self._full) - self._window.maxlen
        self._sampled = [r for r in self._full[:cut] if r.index % self.stride == 0]
        self._window.extend(self._full[cut:])
        self._full = []
        self._thinned = True

    @property
    def truncated(self) -> bool:
        """True once records have been dropped."""
        return self._thinned

    @property
    def records(self) -> List[IterateRecord]:
        """Retained records in iteration order."""
        if not self._thinned:
            return list(self._full)
        return self._sampled + list(self._window)

    def __len__(self) -> int:
        return len(self._full) if not self._thinned else len(self._sampled) + len(self._window)

    def __iter__(self):
        return iter(self.records)

    def consecutive_pairs(self):
        """(previous, current) pairs with current.index == previous.index + 1 in one cycle."""
        records = self.records
        for previous, current in zip(records, records[1:]):
            if current.index == previous.index + 1 and current.cycle == previous.cycle:
                yield previous, current


@dataclass
class Certificate:
    """Approximate solution certificate

    Q (v^x, v^y, v^gamma) lies in T(x, y, gamma~) and |(v^x, v^y, v^gamma)|_Q <= rho.

    Properties:
        x, y, gamma_tilde: certified point
        vx, vy, vgamma: residual blocks
        residual: Q-norm of the residual
        cycles: cycles run
        total_iters: iterations over all cycles
        cycle_iters: iterations per cycle
        mu: regularization of the final cycle
        gamma: final multiplier gamma_k
        f_witness, g_witness: subgradients of f at x and g at y
    """

    x: NumpyArray
    y: NumpyArray
    gamma_tilde: NumpyArray
    vx: NumpyArray
    vy: NumpyArray
    vgamma: NumpyArray
    residual: float
    cycles: int
    total_iters: int
    cycle_iters: List[int]
    mu: float
    gamma: NumpyArray
    f_witness: Optional[NumpyArray]
    g_witness: Optional[NumpyArray]

    @property
    def v(self) -> BlockPoint:
        return BlockPoint(self.vx, self.vy, self.vgamma)

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {}
        for name, value in self.__dict__.items():
            record[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "Certificate":
        values = {}
        for name in cls.__dataclass_fields__:
            value = record.get(name)
            if isinstance(value, list) and name != "cycle_iters":
                value = np.array(value, dtype=float)
            values[name] = value
        return cls(**values)


def dradmm_step(
    problem: SeparableProblem,
    cfg: DrAdmmConfig,
    R: PsdOperator,
    S: PsdOperator,
    z_prev: BlockPoint,
    z0: BlockPoint,
    mu: float,
    index: int = 1,
    cycle: int = 1,
    k: int = 1,
) -> IterateRecord:
    """One DR-ADMM iteration from z_prev with regularization mu."""
    A, B, b = problem.A, problem.B, problem.b
    beta1, beta2 = cycle_constants(cfg.beta, cfg.theta, mu)
    x_hat, y_hat, gamma_hat = hat_points(z_prev, z0, mu, cfg.theta)
    x, f_witness = solve_x_subproblem(problem, gamma_hat, z_prev.y, x_hat, beta1, mu, R)
    gamma_tilde, u = predict_multiplier(gamma_hat, x, z_prev.y, y_hat, beta1, beta2, A, B, b)
    y, g_witness = solve_y_subproblem(problem, u, x, y_hat, beta2, cfg.alpha, cfg.beta, S)
    gamma = correct_multiplier(
        gamma_tilde, x, y, z_prev.gamma, z0.gamma, cfg.beta, cfg.theta, mu, A, B, b
    )
    return IterateRecord(
        index=index,
        cycle=cycle,
        k=k,
        mu=mu,
        beta1=beta1,
        beta2=beta2,
        x_hat=x_hat,
        y_hat=y_hat,
        gamma_hat=gamma_hat,
        x=x,
        y=y,
        gamma=gamma,
        gamma_tilde=gamma_tilde,
        u=u,
        dx=z_prev.x - x,
        dy=z_prev.y - y,
        dgamma=z_prev.gamma - gamma,
        f_witness=f_witness,
        g_witness=g_witness,
    )


class DrAdmmOracle:
    """DR-ADMM iteration as an HPE step oracle.

    Cycles are detected from changes of mu. Produced records are collected in
    `trace`; eta_rule, when given, maps a record to eta_k.

    Args:
        problem: the instance
        cfg: run parameters
        eta_rule: optional callable IterateRecord -> eta_k (see drhpe.certify.make_eta_rule)
    """

    def __init__(
        self,
        problem: SeparableProblem,
        cfg: DrAdmmConfig,
        eta_rule: Optional[Callable[[IterateRecord], float]] = None,
    ):
        validate_config(cfg, problem)
        self.problem = problem
        self.cfg = cfg
        self.R, self.S, self.z0 = cfg.blocks(problem)
        self.metric = build_metric(problem, cfg)
        self.eta_rule = eta_rule
        self.trace = IterateTrace()
        self._mu: Optional[float] = None
        self._cycle = 0
        self._k = 0
        self._index = 0

    def produce(self, z_prev: BlockPoint, mu: float, z0: BlockPoint) -> StepResult:
        if mu != self._mu:
            self._mu = mu
            self._cycle += 1
            self._k = 0
        self._k += 1
        self._index += 1
        record = dradmm_step(
            self.problem, self.cfg, self.R, self.S, z_prev, z0, mu,
            index=self._index, cycle=self._cycle, k=self._k,
        )
        self.trace.append(record)
        eta = self.eta_rule(record) if self.eta_rule is not None else 0.0
        return StepResult(record.z, record.z_tilde, eta)


def run(
    problem: SeparableProblem,
    cfg: DrAdmmConfig,
    logger: Optional[Logger] = None,
    trace_writer=None,
) -> Tuple[Certificate, IterateTrace]:
    """Run DR-ADMM to a rho-approximate certificate.

    Args:
        problem: the instance
        cfg: run parameters
        logger: optional logger; per-cycle records at DEBUG, result at INFO
        trace_writer: optional drhpe.tracefile.TraceWriter receiving every record

    Returns:
        (certificate, trace); the trace is empty unless cfg.trace_enabled

    Raises:
        NonConvergenceError: limits exceeded; the error's trace is the partial trace
        SubproblemConfigurationError, SingularSystemError: from the subproblem solves
    """
    logger = logger or Logger.quiet()
    validate_config(cfg, problem)
    R, S, z0 = cfg.blocks(problem)
    metric = build_metric(problem, cfg)
    trace = IterateTrace()
    cycle_iters: List[int] = []
    mu = 1.0
    z_prev = z0
    cycle = 1
    total = 0
    while True:
        k = 0
        while True:
            if total >= cfg.max_inner_iters:
                raise NonConvergenceError(
                    f"{problem.name}: exceeded {cfg.max_inner_iters} iterations in cycle {cycle}",
                    trace=trace,
                    iterations=total,
                )
            k += 1
            total += 1
            record = dradmm_step(
                problem, cfg, R, S, z_prev, z0, mu, index=total, cycle=cycle, k=k
            )
            if cfg.trace_enabled:
                trace.append(record)
            if trace_writer is not None:
                trace_writer.write_record(record)
            if inner_stop(record.dx, record.dy, record.dgamma, metric, cfg.rho):
                break
            z_prev = record.z
        vx, vy, vgamma = outer_residuals(
            record.dx, record.dy, record.dgamma, record.x, record.y, record.gamma_tilde, z0, mu
        )
        residual = metric.norm(BlockPoint(vx, vy, vgamma))
        cycle_iters.append(k)
        logger.log_time(
            f"cycle {cycle}: mu={mu:.3e} iterations={k} residual={residual:.3e}", level="DEBUG"
        )
        if residual <= cfg.rho:
            break
        if cycle >= cfg.max_cycles:
            raise NonConvergenceError(
                f"{problem.name}: exceeded {cfg.max_cycles} cycles, residual {residual:.3e}",
                trace=trace,
                iterations=total,
            )
        mu = mu / 2
        cycle += 1
        z_prev = record.z if cfg.warm_start else z0

    certificate = Certificate(
        x=record.x,
        y=record.y,
        gamma_tilde=record.gamma_tilde,
        vx=vx,
        vy=vy,
        vgamma=vgamma,
        residual=residual,
        cycles=cycle,
        total_iters=total,
        cycle_iters=cycle_iters,
        mu=mu,
        gamma=record.gamma,
        f_witness=record.f_witness,
        g_witness=record.g_witness,
    )
    if trace_writer is not None:
        trace_writer.write_certificate(certificate)
    logger.log_dict(
        {
            "instance": problem.name,
            "residual": residual,
            "cycles": cycle,
            "iterations": total,
        },
        level="INFO",
    )
    return certificate, trace


def hpe_params_for(
    cfg: DrAdmmConfig, sigma: float = 0.0, tau: float = 0.5, eta0: float = 0.0
) -> HpeParams:
    """HpeParams matching a DR-ADMM config, for driving DrAdmmOracle through hpe_run."""
    return HpeParams(
        eta0=eta0,
        sigma=sigma,
        tau=tau,
        rho=cfg.rho,
        max_cycles=cfg.max_cycles,
        max_inner_iters=cfg.max_inner_iters,
        warm_start=cfg.warm_start,
    )
