"""Analysis constants of DR-ADMM and checks of its convergence inequalities on live iterates.

Constants:
    abc, sigma_bar, g_matrix, sigma_lower_terms, root_conditions, find_tau,
    analysis_constants, proposition_params
Iterate checks (all tolerances relative, scaled by 1 + magnitude):
    check_inclusion_aux0: Q dz_k - mu Q (z~_k - z0) in T(z~_k)
    check_lemma_deltak: multiplier identity, first-step bound, cross-term bound
    check_es2: relative error condition with the (sigma, tau, eta) of the regime
    check_inclusion_a467: Q v in T(x, y, gamma~) for the final certificate
certify_run bundles everything into a CertificationReport.

Readings used (printed in every report): the coefficient written with a
bar on theta is theta * sigma_bar; eta_0 and the first-step slack use the
squared distance bound d0^2; later cycles with warm start use
d0 + |z_start - z0|_Q as distance bound.
"""

from dataclasses import dataclass, field
from math import sqrt
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from drhpe.dradmm import Certificate, IterateRecord, IterateTrace, stepsize_upper_bound
from drhpe.errors import (
    InsufficientDataError,
    MissingWitnessError,
    RegimeError,
    TheoryViolationError,
)
from drhpe.logger import Logger
from drhpe.objectives import SeparableProblem
from drhpe.operators import BlockPoint, QMetric

NumpyArray = np.ndarray

REGIME_LT_1 = "theta_lt_1"
REGIME_GE_1 = "theta_ge_1"
THEORY_TOL = 1e-10
INCLUSION_TOL = 1e-8
IDENTITY_TOL = 1e-9
TAU_GRID = 1024
READINGS = (
    "theta-sigma coefficient read as theta * sigma_bar",
    "eta_0 and first-step slack use d0^2",
    "cycle c > 1 uses d0 + |z_start - z0|_Q when warm started",
)


def _pieces(theta: float, alpha: float, tau: float) -> Tuple[float, float, float, float]:
    """(e, d, P, K) = (1 - theta, (1 - theta)^2, (1-tau)(1+alpha)(1+theta) - alpha,
    1 - tau (1 + alpha (1 - theta)))"""
    e = 1.0 - theta
    d = e * e
    p_coef = (1.0 - tau) * (1.0 + alpha) * (1.0 + theta) - alpha
    k_coef = 1.0 - tau * (1.0 + alpha * e)
    return e, d, p_coef, k_coef


def abc(theta: float, alpha: float, tau: float) -> Tuple[float, float, float]:
    """Coefficients of det G(sigma) = a sigma^2 - b sigma + c."""
    e, d, p_coef, k_coef = _pieces(theta, alpha, tau)
    a = p_coef - d
    b = (p_coef - 2.0 * e) * d + k_coef
    c = (k_coef - d) * d
    return a, b, c


def root_conditions(theta: float, alpha: float, tau: float) -> Dict[str, bool]:
    """Feasibility conditions a > 0, b > 0, a - b + c > 0, b^2 - 4ac >= 0."""
    a, b, c = abc(theta, alpha, tau)
    return {
        "a_positive": a > 0,
        "b_positive": b > 0,
        "a_minus_b_plus_c_positive": a - b + c > 0,
        "discriminant_nonnegative": b * b - 4.0 * a * c >= -THEORY_TOL * b * b,
    }


def sigma_bar(theta: float, alpha: float, tau: float) -> float:
    """Largest root (b + sqrt(b^2 - 4ac)) / (2a) of det G(sigma) = 0.

    Raises:
        RegimeError: a feasibility condition fails or the root is outside (0, 1)
    """
    conditions = root_conditions(theta, alpha, tau)
    failed = [name for name, holds in conditions.items() if not holds]
    if failed:
        raise RegimeError(
            f"theta={theta}, alpha={alpha}, tau={tau}: {', '.join(failed)} violated"
        )
    a, b, c = abc(theta, alpha, tau)
    sigma = (b + sqrt(max(b * b - 4.0 * a * c, 0.0))) / (2.0 * a)
    if not 0 < sigma < 1:
        raise RegimeError(f"sigma_bar={sigma} outside (0, 1) for theta={theta}, alpha={alpha}")
    return sigma


def g_matrix(sigma: float, theta: float, alpha: float, tau: float) -> NumpyArray:
    """Symmetric 2x2 matrix whose PSD-ness at sigma_bar carries the error condition."""
    e, d, p_coef, k_coef = _pieces(theta, alpha, tau)
    off_diagonal = (sigma + theta - 1.0) * e
    return np.array(
        [[p_coef * sigma - k_coef, off_diagonal], [off_diagonal, sigma - d]], dtype=float
    )


def sigma_lower_terms(theta: float, alpha: float, tau: float) -> Tuple[float, float, float]:
    """Three lower bounds sigma_bar must dominate."""
    _, d, p_coef, k_coef = _pieces(theta, alpha, tau)
    middle = tau * (theta - 1.0) / ((1.0 - tau) * theta - tau)
    return d, middle, k_coef / p_coef


def _tau_feasible(theta: float, alpha: float, tau: float) -> bool:
    if not all(root_conditions(theta, alpha, tau).values()):
        return False
    try:
        sigma = sigma_bar(theta, alpha, tau)
    except RegimeError:
        return False
    return all(term <= sigma + THEORY_TOL for term in sigma_lower_terms(theta, alpha, tau))


def find_tau(theta: float, alpha: float) -> float:
    """Largest tau on the grid {j / 1024 : j = 1..511} satisfying every constant condition.

    Raises:
        RegimeError: theta outside [1, stepsize_upper_bound(alpha))
        TheoryViolationError: no grid point is feasible
    """
    if not 1.0 <= theta < stepsize_upper_bound(alpha):
        raise RegimeError(
            f"theta={theta} outside [1, {stepsize_upper_bound(alpha):.6f}) for alpha={alpha}"
        )
    for j in range(TAU_GRID // 2 - 1, 0, -1):
        tau = j / TAU_GRID
        if _tau_feasible(theta, alpha, tau):
            return tau
    raise TheoryViolationError(f"no feasible tau for theta={theta}, alpha={alpha}")


@dataclass(frozen=True)
class AnalysisConstants:
    """Constants of the theta >= 1 analysis

    Properties:
        theta, alpha: method parameters
        tau: tau_bar in (0, 1/2)
        sigma: sigma_bar in (0, 1)
        a, b, c: det G coefficients
        G: G(sigma_bar)
        regime: always theta_ge_1
    """

    theta: float
    alpha: float
    tau: float
    sigma: float
    a: float
    b: float
    c: float
    G: NumpyArray
    regime: str = REGIME_GE_1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta": self.theta,
            "alpha": self.alpha,
            "tau_bar": self.tau,
            "sigma_bar": self.sigma,
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "G": self.G.tolist(),
            "regime": self.regime,
        }


def analysis_constants(
    theta: float, alpha: float, tau: Optional[float] = None
) -> AnalysisConstants:
    """AnalysisConstants for (theta, alpha); tau defaults to find_tau(theta, alpha)."""
    if tau is None:
        tau = find_tau(theta, alpha)
    sigma = sigma_bar(theta, alpha, tau)
    a, b, c = abc(theta, alpha, tau)
    return AnalysisConstants(theta, alpha, tau, sigma, a, b, c, g_matrix(sigma, theta, alpha, tau))


@dataclass(frozen=True)
class ErrorParams:
    """(sigma, tau) of the error condition and the regime they come from."""

    sigma: float
    tau: float
    regime: str
    constants: Optional[AnalysisConstants] = None


def proposition_params(theta: float, alpha: float) -> ErrorParams:
    """Error-condition parameters for a stepsize.

    theta < 1: sigma = theta + (theta - 1)^2, tau = 1/2, eta = 0.
    theta >= 1: (sigma_bar, tau_bar) from find_tau, eta from eta_sequence.

    Raises:
        RegimeError: theta outside (0, stepsize_upper_bound(alpha))
    """
    if not 0 < theta < stepsize_upper_bound(alpha):
        raise RegimeError(f"theta={theta} outside the stepsize domain for alpha={alpha}")
    if theta < 1:
        return ErrorParams(theta + (theta - 1.0) ** 2, 0.5, REGIME_LT_1)
    constants = analysis_constants(theta, alpha)
    return ErrorParams(constants.sigma, constants.tau, REGIME_GE_1, constants)


def eta_coefficients(constants: AnalysisConstants, beta: float) -> Tuple[float, float]:
    """(c_gamma, c_y) with eta_k = c_gamma |dgamma_k|^2 + c_y |dy_k|^2_{alpha beta B'B + S}."""
    theta, sigma, tau = constants.theta, constants.sigma, constants.tau
    c_gamma = (sigma - (theta - 1.0) ** 2) / (beta * theta ** 3)
    c_y = (sigma + theta - 1.0) / (theta * (1.0 - tau))
    return c_gamma, c_y


def eta0_value(constants: AnalysisConstants, distance: float) -> float:
    """4 (sigma_bar + theta - 1) d^2 / ((2 - theta)(1 - tau_bar))."""
    theta = constants.theta
    if theta >= 2:
        raise RegimeError(f"eta_0 undefined for theta={theta} >= 2")
    return (
        4.0 * (constants.sigma + theta - 1.0) * distance ** 2
        / ((2.0 - theta) * (1.0 - constants.tau))
    )


def make_eta_rule(params: ErrorParams, metric: QMetric) -> Callable[[IterateRecord], float]:
    """record -> eta_k for DrAdmmOracle."""
    if params.regime == REGIME_LT_1:
        return lambda record: 0.0
    c_gamma, c_y = eta_coefficients(params.constants, metric.beta)

    def rule(record: IterateRecord) -> float:
        return c_gamma * float(record.dgamma @ record.dgamma) + c_y * metric.proximal_y_sq(
            record.dy
        )

    return rule


@dataclass
class EtaSequence:
    """eta values of a trace

    Properties:
        eta0: eta_0 of the first cycle (None without a distance bound)
        d0_bound: distance bound used
        values: eta_k by record index
        cycle_eta0: eta_0 used at k = 1 of each cycle (None without a bound)
        cycle_distance: distance bound used for each cycle
    """

    eta0: Optional[float]
    d0_bound: Optional[float]
    values: Dict[int, float] = field(default_factory=dict)
    cycle_eta0: Dict[int, Optional[float]] = field(default_factory=dict)
    cycle_distance: Dict[int, Optional[float]] = field(default_factory=dict)


def eta_sequence(
    trace: IterateTrace,
    constants: AnalysisConstants,
    d0_bound: Optional[float],
    metric: QMetric,
    z0: BlockPoint,
) -> EtaSequence:
    """eta_0 per cycle and eta_k per retained record.

    Raises:
        RegimeError: theta outside [1, 2)
    """
    if constants.regime != REGIME_GE_1 or not 1.0 <= constants.theta < 2.0:
        raise RegimeError(f"eta sequence needs theta in [1, 2), got {constants.theta}")
    params = ErrorParams(constants.sigma, constants.tau, REGIME_GE_1, constants)
    rule = make_eta_rule(params, metric)
    sequence = EtaSequence(
        eta0=None if d0_bound is None else eta0_value(constants, d0_bound),
        d0_bound=d0_bound,
    )
    for record in trace.records:
        sequence.values[record.index] = rule(record)
        if record.k == 1:
            if d0_bound is None:
                distance = None
            else:
                distance = d0_bound + metric.norm(record.z_prev - z0)
            sequence.cycle_distance[record.cycle] = distance
            sequence.cycle_eta0[record.cycle] = (
                None if distance is None else eta0_value(constants, distance)
            )
    return sequence


@dataclass
class InclusionResult:
    """Residual of an inclusion check

    Properties:
        residual: largest block norm of the residual
        scale: largest norm of the terms entering the residual
        passed: residual <= tol (1 + scale)
        norm: Q-norm of v (certificate check only)
    """

    residual: float
    scale: float
    passed: bool
    norm: Optional[float] = None

    @property
    def relative(self) -> float:
        return self.residual / (1.0 + self.scale)


def _inclusion(terms: List[List[NumpyArray]], tol: float) -> InclusionResult:
    residual = 0.0
    scale = 0.0
    for block in terms:
        total = sum(block[1:], block[0])
        residual = max(residual, float(np.linalg.norm(total)))
        scale = max(scale, max(float(np.linalg.norm(term)) for term in block))
    return InclusionResult(residual, scale, residual <= tol * (1.0 + scale))


def check_inclusion_aux0(
    record: IterateRecord,
    problem: SeparableProblem,
    metric: QMetric,
    z0: BlockPoint,
    tol: float = INCLUSION_TOL,
) -> InclusionResult:
    """Q dz_k - mu Q (z~_k - z0) in T(z~_k), using the record's witnesses.

    Raises:
        MissingWitnessError: the record has no f or g witness
    """
    if record.f_witness is None or record.g_witness is None:
        raise MissingWitnessError(f"record {record.index} carries no subgradient witnesses")
    mu = record.mu
    A, B = problem.A, problem.B
    weight = metric.gamma_weight
    terms = [
        [
            record.f_witness,
            -(A.T @ record.gamma_tilde),
            mu * metric.R.apply(record.x - z0.x),
            -metric.R.apply(record.dx),
        ],
        [
            record.g_witness,
            -(B.T @ record.gamma_tilde),
            mu * metric.y_apply(record.y - z0.y),
            -metric.y_apply(record.dy),
        ],
        [
            A @ record.x,
            B @ record.y,
            -problem.b,
            mu * weight * (record.gamma_tilde - z0.gamma),
            -weight * record.dgamma,
        ],
    ]
    return _inclusion(terms, tol)


def check_inclusion_a467(
    certificate: Certificate,
    problem: SeparableProblem,
    metric: QMetric,
    rho: Optional[float] = None,
    tol: float = INCLUSION_TOL,
) -> InclusionResult:
    """Q (v^x, v^y, v^gamma) in T(x, y, gamma~) and, when rho is given, |v|_Q <= rho.

    Raises:
        MissingWitnessError: the certificate has no f or g witness
    """
    if certificate.f_witness is None or certificate.g_witness is None:
        raise MissingWitnessError("certificate carries no subgradient witnesses")
    A, B = problem.A, problem.B
    terms = [
        [certificate.f_witness, -(A.T @ certificate.gamma_tilde), -metric.R.apply(certificate.vx)],
        [certificate.g_witness, -(B.T @ certificate.gamma_tilde), -metric.y_apply(certificate.vy)],
        [
            A @ certificate.x,
            B @ certificate.y,
            -problem.b,
            -metric.gamma_weight * certificate.vgamma,
        ],
    ]
    result = _inclusion(terms, tol)
    result.norm = metric.norm(certificate.v)
    if rho is not None and not result.norm <= rho:
        result.passed = False
    return result


def d0_upper(problem: SeparableProblem, z0: BlockPoint, metric: QMetric) -> float:
    """|z0 - z*|_Q for the instance's known solution z*.

    Raises:
        InsufficientDataError: the instance has no known solution
    """
    if problem.known_solution is None:
        raise InsufficientDataError(f"{problem.name} has no known solution to bound d0")
    return metric.norm(z0 - problem.known_solution)


@dataclass
class Es2Entry:
    index: int
    cycle: int
    k: int
    lhs: float
    rhs: float
    passed: bool


@dataclass
class Es2Report:
    """Per-iteration error-condition results; skipped counts records without a
    usable predecessor eta."""

    entries: List[Es2Entry] = field(default_factory=list)
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    @property
    def worst_slack(self) -> float:
        """Largest (lhs - rhs) / (1 + rhs); <= tol when passing."""
        if not self.entries:
            return 0.0
        return max((e.lhs - e.rhs) / (1.0 + e.rhs) for e in self.entries)


def check_es2(
    trace: IterateTrace,
    metric: QMetric,
    sigma: float,
    tau: float,
    eta: Optional[EtaSequence] = None,
    tol: float = INCLUSION_TOL,
) -> Es2Report:
    """|z_k - z~_k|^2_Q + eta_k <= sigma |z_{k-1} - z~_k|^2_Q + (1 - tau) eta_{k-1}.

    eta None means eta = 0 throughout. With an EtaSequence, k = 1 uses the
    cycle's eta_0 and k >= 2 needs the predecessor record in the trace.
    """
    report = Es2Report()
    previous: Optional[IterateRecord] = None
    for record in trace.records:
        if eta is None:
            eta_k, eta_prev = 0.0, 0.0
        else:
            eta_k = eta.values[record.index]
            if record.k == 1:
                eta_prev = eta.cycle_eta0.get(record.cycle)
            elif previous is not None and previous.index == record.index - 1:
                eta_prev = eta.values[previous.index]
            else:
                eta_prev = None
        previous = record
        if eta_prev is None:
            report.skipped += 1
            continue
        zk_gap = BlockPoint(
            np.zeros_like(record.x), np.zeros_like(record.y), record.gamma - record.gamma_tilde
        )
        lhs = metric.norm_sq(zk_gap) + eta_k
        rhs = sigma * metric.norm_sq(record.z_prev - record.z_tilde) + (1.0 - tau) * eta_prev
        report.entries.append(
            Es2Entry(record.index, record.cycle, record.k, lhs, rhs, lhs <= rhs + tol * (1 + rhs))
        )
    return report


@dataclass
class IterateBoundsReport:
    """Multiplier identity residuals and the two step inequalities

    Properties:
        identity: (index, relative residual) of gamma~ - gamma_prev + beta B dy + dgamma / theta
        first_step: (cycle, slack) of the k = 1 bound, only with a distance bound
        cross_term: (index, slack) of the k >= 2 bound
    """

    identity: List[Tuple[int, float]] = field(default_factory=list)
    first_step: List[Tuple[int, float]] = field(default_factory=list)
    cross_term: List[Tuple[int, float]] = field(default_factory=list)
    identity_tol: float = IDENTITY_TOL
    slack_tol: float = INCLUSION_TOL

    @property
    def identity_passed(self) -> bool:
        return all(value <= self.identity_tol for _, value in self.identity)

    @property
    def first_step_passed(self) -> bool:
        return all(value >= -self.slack_tol for _, value in self.first_step)

    @property
    def cross_term_passed(self) -> bool:
        return all(value >= -self.slack_tol for _, value in self.cross_term)

    @property
    def passed(self) -> bool:
        return self.identity_passed and self.first_step_passed and self.cross_term_passed


def check_lemma_deltak(
    trace: IterateTrace,
    metric: QMetric,
    cycle_distance: Optional[Dict[int, Optional[float]]] = None,
) -> IterateBoundsReport:
    """Check the step relations of every retained record.

    Args:
        trace: iterate trace
        metric: the run's Q (supplies beta, theta, alpha, B, S)
        cycle_distance: distance bound per cycle (EtaSequence.cycle_distance);
            the k = 1 bound is only checked for cycles with a bound and theta in [1, 2)

    Slacks are relative: (lhs - rhs) / (1 + sum of |terms|).
    """
    report = IterateBoundsReport()
    beta, theta, B = metric.beta, metric.theta, metric.B
    records = trace.records
    for record in records:
        gamma_prev = record.gamma + record.dgamma
        b_dy = B @ record.dy
        residual = record.gamma_tilde - gamma_prev + beta * b_dy + record.dgamma / theta
        report.identity.append(
            (
                record.index,
                float(np.linalg.norm(residual))
                / (1.0 + float(np.linalg.norm(record.gamma_tilde))),
            )
        )
        if record.k == 1 and cycle_distance and 1.0 <= theta < 2.0:
            distance = cycle_distance.get(record.cycle)
            if distance is not None:
                lhs = float(b_dy @ record.dgamma) / theta
                w_norm = 0.5 * metric.proximal_y_sq(record.dy)
                slack_term = 2.0 * theta * distance ** 2 / (2.0 - theta)
                scale = 1.0 + abs(lhs) + w_norm + slack_term
                report.first_step.append((record.cycle, (lhs - w_norm + slack_term) / scale))
    for previous, current in trace.consecutive_pairs():
        b_dy = B @ current.dy
        lhs = 2.0 * float(b_dy @ current.dgamma)
        cross = 2.0 * (1.0 - theta) * float(b_dy @ previous.dgamma)
        w_now = theta * metric.proximal_y_sq(current.dy)
        w_prev = theta * metric.proximal_y_sq(previous.dy)
        scale = 1.0 + abs(lhs) + abs(cross) + w_now + w_prev
        report.cross_term.append((current.index, (lhs - cross - w_now + w_prev) / scale))
    return report


@dataclass
class CheckResult:
    """One line of a certification report."""

    name: str
    passed: bool
    checked: int
    skipped: int = 0
    worst: float = 0.0
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "skipped": self.skipped,
            "worst": self.worst,
            "detail": self.detail,
        }


@dataclass
class CertificationReport:
    """Outcome of certify_run

    Properties:
        checks: one CheckResult per check
        constants: parameters and analysis constants used
    """

    checks: List[CheckResult] = field(default_factory=list)
    constants: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> CheckResult:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"certification: {'PASS' if self.passed else 'FAIL'}", "", "constants:"]
        for key, value in self.constants.items():
            text = f"{value:.10g}" if isinstance(value, float) else str(value)
            lines.append(f"  {key}: {text}")
        lines.append("")
        lines.append("checks:")
        for item in self.checks:
            status = "PASS" if item.passed else "FAIL"
            text = (
                f"  {item.name}: {status} checked={item.checked} skipped={item.skipped} "
                f"worst={item.worst:.3e}"
            )
            if item.detail:
                text += f" ({item.detail})"
            lines.append(text)
        lines.append("")
        lines.append("readings:")
        lines.extend(f"  {reading}" for reading in READINGS)
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "constants": self.constants,
            "checks": {item.name: item.to_dict() for item in self.checks},
            "readings": list(READINGS),
        }


def certify_run(
    problem: SeparableProblem,
    metric: QMetric,
    z0: BlockPoint,
    trace: IterateTrace,
    certificate: Optional[Certificate] = None,
    d0_bound: Optional[float] = None,
    rho: Optional[float] = None,
    tol: float = INCLUSION_TOL,
    logger: Optional[Logger] = None,
) -> CertificationReport:
    """Run every check on a trace (and certificate).

    d0_bound defaults to d0_upper when the instance has a known solution;
    without one the distance-dependent k = 1 checks are skipped and reported.
    """
    logger = logger or Logger.quiet()
    theta, alpha = metric.theta, metric.alpha
    params = proposition_params(theta, alpha)
    if d0_bound is None and problem.known_solution is not None:
        d0_bound = d0_upper(problem, z0, metric)
    report = CertificationReport()
    report.constants = {
        "theta": theta,
        "alpha": alpha,
        "beta": metric.beta,
        "regime": params.regime,
        "sigma": params.sigma,
        "tau": params.tau,
        "stepsize_bound": stepsize_upper_bound(alpha),
        "d0_bound": d0_bound,
        "records": len(trace),
        "trace_truncated": trace.truncated,
    }
    if params.constants is not None:
        constants = params.constants
        report.constants.update(a=constants.a, b=constants.b, c=constants.c)
        min_eig = float(np.linalg.eigvalsh(constants.G).min())
        det = float(np.linalg.det(constants.G))
        terms = sigma_lower_terms(theta, alpha, constants.tau)
        terms_ok = all(t <= constants.sigma + THEORY_TOL for t in terms)
        report.checks.append(
            CheckResult(
                "analysis_constants",
                all(root_conditions(theta, alpha, constants.tau).values())
                and terms_ok
                and min_eig >= -THEORY_TOL,
                1,
                worst=abs(det),
                detail=f"min eig G={min_eig:.3e}",
            )
        )

    records = trace.records
    worst = 0.0
    passed = True
    for record in records:
        result = check_inclusion_aux0(record, problem, metric, z0, tol)
        worst = max(worst, result.relative)
        passed = passed and result.passed
    report.checks.append(CheckResult("inclusion", passed, len(records), worst=worst))

    eta = None
    cycle_distance = None
    if params.regime == REGIME_GE_1:
        eta = eta_sequence(trace, params.constants, d0_bound, metric, z0)
        cycle_distance = eta.cycle_distance
        c_gamma, c_y = eta_coefficients(params.constants, metric.beta)
        lowest = min(eta.values.values(), default=0.0)
        report.checks.append(
            CheckResult(
                "eta_nonnegative",
                c_gamma >= 0 and c_y >= 0 and lowest >= 0,
                len(eta.values),
                worst=min(lowest, 0.0),
                detail=f"c_gamma={c_gamma:.3e} c_y={c_y:.3e}",
            )
        )

    bounds = check_lemma_deltak(trace, metric, cycle_distance)
    report.checks.append(
        CheckResult(
            "multiplier_identity",
            bounds.identity_passed,
            len(bounds.identity),
            worst=max((v for _, v in bounds.identity), default=0.0),
        )
    )
    report.checks.append(
        CheckResult(
            "cross_term_bound",
            bounds.cross_term_passed,
            len(bounds.cross_term),
            skipped=max(len(records) - len(bounds.cross_term), 0),
            worst=min((v for _, v in bounds.cross_term), default=0.0),
        )
    )
    if params.regime == REGIME_GE_1:
        first_cycles = len({r.cycle for r in records if r.k == 1})
        report.checks.append(
            CheckResult(
                "first_step_bound",
                bounds.first_step_passed,
                len(bounds.first_step),
                skipped=first_cycles - len(bounds.first_step),
                worst=min((v for _, v in bounds.first_step), default=0.0),
                detail="" if d0_bound is not None else "no distance bound",
            )
        )

    es2 = check_es2(trace, metric, params.sigma, params.tau, eta, tol)
    report.checks.append(
        CheckResult(
            "error_condition",
            es2.passed,
            len(es2.entries),
            skipped=es2.skipped,
            worst=es2.worst_slack,
        )
    )

    if certificate is not None:
        result = check_inclusion_a467(certificate, problem, metric, rho, tol)
        report.checks.append(
            CheckResult(
                "certificate",
                result.passed,
                1,
                worst=result.relative,
                detail=f"|v|_Q={result.norm:.3e}" + (f" rho={rho:.3e}" if rho else ""),
            )
        )

    level = "INFO" if report.passed else "WARN"
    logger.log_time(f"certification {'passed' if report.passed else 'failed'}", level=level)
    for item in report.checks:
        if not item.passed:
            logger.log_time(f"  {item.name} failed, worst={item.worst:.3e}", level="WARN")
    return report
