import numpy as np
import pytest

from drhpe.certify import check_inclusion_a467, check_inclusion_aux0, check_lemma_deltak
from drhpe.dradmm import (
    DrAdmmConfig,
    DrAdmmOracle,
    IterateRecord,
    IterateTrace,
    build_metric,
    cycle_constants,
    default_rs_blocks,
    hat_points,
    hpe_params_for,
    inner_stop,
    multiplier_updates,
    outer_residuals,
    run,
    stepsize_upper_bound,
    validate_config,
)
from drhpe.errors import (
    DimensionMismatchError,
    InvalidPenaltyError,
    InvalidProximalFactorError,
    InvalidToleranceError,
    NonConvergenceError,
    StepsizeOutOfDomainError,
    SubproblemConfigurationError,
)
from drhpe.examples import gen_eq_qp, gen_lasso, gen_trivial
from drhpe.hpe import hpe_run
from drhpe.objectives import ProxFunction, SeparableProblem, kkt_residual
from drhpe.operators import BlockPoint, PsdOperator, QMetric


def _lasso_config(problem, **kwargs):
    R, S = default_rs_blocks(problem, "auto")
    settings = dict(theta=1.6, alpha=10.0, beta=1.0, rho=1e-4, R=R, S=S, trace_enabled=True)
    settings.update(kwargs)
    return DrAdmmConfig(**settings)


def _record(index, cycle=1, k=None):
    zeros = np.zeros(1)
    return IterateRecord(
        index=index,
        cycle=cycle,
        k=index if k is None else k,
        mu=1.0,
        beta1=0.5,
        beta2=2.0,
        x_hat=zeros,
        y_hat=zeros,
        gamma_hat=zeros,
        x=zeros,
        y=zeros,
        gamma=zeros,
        gamma_tilde=zeros,
        u=zeros,
        dx=zeros,
        dy=zeros,
        dgamma=zeros,
        f_witness=zeros,
        g_witness=zeros,
    )


def test_stepsize_upper_bound():
    """Golden ratio at alpha = 0, sqrt(3) at alpha = 1, close to 2 for large alpha."""
    assert stepsize_upper_bound(0.0) == pytest.approx((1 + np.sqrt(5)) / 2)
    assert stepsize_upper_bound(1.0) == pytest.approx(np.sqrt(3))
    assert stepsize_upper_bound(100.0) == pytest.approx(1.99029035, abs=1e-8)
    assert stepsize_upper_bound(1e6) < 2.0


@pytest.mark.parametrize(
    "theta, alpha, accepted",
    [
        (1.6, 0.0, True),
        (1.62, 0.0, False),
        (1.73, 1.0, True),
        (1.74, 1.0, False),
        (1.99, 100.0, True),
        (1.9902, 100.0, True),
        (1.9904, 100.0, False),
        (0.0, 0.0, False),
    ],
)
def test_validate_stepsize(theta, alpha, accepted):
    """theta must lie strictly inside the stepsize domain."""
    problem = gen_trivial(1)
    cfg = DrAdmmConfig(theta=theta, alpha=alpha)
    if accepted:
        validate_config(cfg, problem)
    else:
        with pytest.raises(StepsizeOutOfDomainError):
            validate_config(cfg, problem)


def test_validate_named_conditions():
    """Each violated hypothesis has its own error class."""
    problem = gen_trivial(2)
    with pytest.raises(InvalidPenaltyError):
        validate_config(DrAdmmConfig(beta=0.0), problem)
    with pytest.raises(InvalidToleranceError):
        validate_config(DrAdmmConfig(rho=-1.0), problem)
    with pytest.raises(InvalidProximalFactorError):
        validate_config(DrAdmmConfig(alpha=-0.5, theta=1.0), problem)
    with pytest.raises(DimensionMismatchError):
        validate_config(DrAdmmConfig(R=PsdOperator.zero(3)), problem)
    with pytest.raises(DimensionMismatchError):
        validate_config(DrAdmmConfig(z0=BlockPoint.zeros(2, 2, 1)), problem)


@pytest.mark.parametrize(
    "beta, theta, mu, expected",
    [(1.0, 1.0, 1.0, (0.5, 2.0)), (3.0, 1.5, 0.5, (2.25, 4.5))],
)
def test_cycle_constants(beta, theta, mu, expected):
    """beta_1 = theta beta / (theta + mu), beta_2 = beta (1 + mu)."""
    assert cycle_constants(beta, theta, mu) == pytest.approx(expected)


def test_cycle_constants_small_mu():
    """mu -> 0 recovers the plain penalty in both constants."""
    beta1, beta2 = cycle_constants(1.0, 2.0, 2.0 ** -20)
    assert beta1 == pytest.approx(1.0, abs=1e-6)
    assert beta2 == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        cycle_constants(1.0, 1.0, 0.0)


def test_hat_points():
    """Midpoint at mu = 1, fixed at z0, and the theta-weighted multiplier."""
    z0 = BlockPoint([0.0], [2.0], [0.0])
    z_prev = BlockPoint([4.0], [2.0], [3.0])
    x_hat, y_hat, gamma_hat = hat_points(z_prev, z0, 1.0, 2.0)
    assert x_hat[0] == 2.0
    assert y_hat[0] == 2.0
    assert gamma_hat[0] == pytest.approx(2.0)
    x_hat, y_hat, gamma_hat = hat_points(z0, z0, 0.3, 1.7)
    assert BlockPoint(x_hat, y_hat, gamma_hat).equals(z0)


def test_multiplier_updates_stationary():
    """Feasible iterate with gamma~ = gamma0 keeps the multiplier."""
    A, B, b = np.eye(2), -np.eye(2), np.zeros(2)
    x = np.array([1.0, -1.0])
    gamma0 = np.array([0.5, 0.25])
    beta1, beta2 = cycle_constants(1.0, 1.0, 1.0)
    gamma_tilde, _, gamma = multiplier_updates(
        gamma0, x, x, x, x, gamma0, gamma0, beta1, beta2, 1.0, 1.0, 1.0, A, B, b
    )
    assert np.array_equal(gamma_tilde, gamma0)
    assert np.array_equal(gamma, gamma0)


def test_multiplier_updates_scalar_chain():
    """m = 1 with every input 1: gamma~ = 0, u = 1, gamma = 1."""
    one = np.ones(1)
    I = np.eye(1)
    gamma_tilde, u, gamma = multiplier_updates(
        one, one, one, one, one, one, one, 1.0, 1.0, 1.0, 1.0, 1.0, I, I, one
    )
    assert gamma_tilde[0] == 0.0
    assert u[0] == 1.0
    assert gamma[0] == 1.0


def test_inner_stop():
    """Zero step stops; the rho / 2 boundary is inclusive; agrees with the Q-norm."""
    metric = QMetric(PsdOperator.zero(2), PsdOperator.zero(2), np.eye(2), 0.0, 1.0, 1.0)
    zeros = np.zeros(2)
    assert inner_stop(zeros, zeros, zeros, metric, 1.0)
    assert inner_stop(zeros, np.array([0.5, 0.0]), zeros, metric, 1.0)
    assert not inner_stop(zeros, np.array([0.5000001, 0.0]), zeros, metric, 1.0)

    rng = np.random.default_rng(21)
    metric = QMetric(
        PsdOperator.identity(3, 0.5),
        PsdOperator.diagonal([1.0, 2.0]),
        rng.standard_normal((4, 2)),
        2.0,
        0.7,
        1.3,
    )
    for _ in range(20):
        dz = BlockPoint(rng.standard_normal(3), rng.standard_normal(2), rng.standard_normal(4))
        rho = 2.0 * metric.norm(dz) * rng.uniform(0.5, 1.5)
        assert inner_stop(dz.x, dz.y, dz.gamma, metric, rho) == (metric.norm(dz) <= rho / 2)


def test_outer_residuals():
    """Zero at a stationary z0; v^x = -w for mu = 1 and x_k - x0 = w."""
    z0 = BlockPoint([1.0], [2.0], [3.0])
    zero = np.zeros(1)
    vx, vy, vgamma = outer_residuals(zero, zero, zero, z0.x, z0.y, z0.gamma, z0, 0.5)
    assert not vx.any() and not vy.any() and not vgamma.any()
    vx, _, _ = outer_residuals(zero, zero, zero, np.array([1.25]), z0.y, z0.gamma, z0, 1.0)
    assert vx[0] == -0.25


def test_default_rs_blocks():
    """auto leaves R = S = 0 when the subproblems are solvable as they stand."""
    problem = gen_eq_qp(4, 3, 2, seed=1)
    R, S = default_rs_blocks(problem, "auto")
    assert R.kind == "zero" and S.kind == "zero"
    R, S = default_rs_blocks(problem, "scaled:2,3")
    assert R.scaled_identity_value() == 2.0 and S.scaled_identity_value() == 3.0

    rng = np.random.default_rng(22)
    l1_coupled = SeparableProblem(
        ProxFunction.zero(2),
        ProxFunction.l1(3),
        np.eye(2),
        rng.standard_normal((2, 3)),
        np.zeros(2),
    )
    with pytest.raises(SubproblemConfigurationError):
        default_rs_blocks(l1_coupled, "auto")


def test_trivial_run():
    """f = g = 0, A = B = I, b = 0 from the origin stops after one iteration."""
    certificate, trace = run(gen_trivial(3), DrAdmmConfig(trace_enabled=True))
    assert certificate.total_iters == 1
    assert certificate.cycles == 1
    assert certificate.residual == 0.0
    assert certificate.v.max_abs() == 0.0
    assert len(trace) == 1


def test_lasso_run_certificate():
    """Certificate residual <= rho, inclusion holds at every iterate, KKT residual bounded by Q."""
    problem = gen_lasso(20, 10, 0.1, seed=3)
    cfg = _lasso_config(problem)
    certificate, trace = run(problem, cfg)
    metric = build_metric(problem, cfg)
    _, _, z0 = cfg.blocks(problem)

    assert certificate.residual <= cfg.rho
    assert metric.norm(certificate.v) == pytest.approx(certificate.residual, abs=1e-12)
    assert check_inclusion_a467(certificate, problem, metric, rho=cfg.rho).passed
    assert len(trace) == certificate.total_iters
    for record in trace:
        assert check_inclusion_aux0(record, problem, metric, z0).passed
    assert check_lemma_deltak(trace, metric).identity_passed

    q_scale = np.sqrt(np.linalg.eigvalsh(metric.to_dense()).max())
    residual = kkt_residual(problem, certificate.x, certificate.y, certificate.gamma_tilde)
    assert residual <= q_scale * cfg.rho + 1e-8


@pytest.mark.parametrize("theta", [0.5, 1.0, 1.6])
def test_stepsizes_terminate(theta):
    """Short and over-relaxed stepsizes both reach the tolerance on the same instance."""
    problem = gen_eq_qp(6, 5, 4, seed=2)
    cfg = _lasso_config(problem, theta=theta, alpha=0.0 if theta < 1.6 else 10.0)
    certificate, _ = run(problem, cfg)
    assert certificate.residual <= cfg.rho


def test_cold_start_terminates():
    """Cycles restarted from z0 still reach the tolerance."""
    problem = gen_lasso(10, 8, 0.2, seed=4)
    certificate, _ = run(problem, _lasso_config(problem, warm_start=False, rho=1e-3))
    assert certificate.residual <= 1e-3


def test_run_matches_hpe_instance():
    """run() and hpe_run() driving the oracle give bitwise identical iterates."""
    problem = gen_lasso(12, 8, 0.1, seed=5)
    cfg = _lasso_config(problem, rho=1e-3)
    certificate, trace = run(problem, cfg)

    oracle = DrAdmmOracle(problem, cfg)
    _, _, z0 = cfg.blocks(problem)
    output = hpe_run(oracle, z0, oracle.metric, hpe_params_for(cfg))

    assert output.total_iters == certificate.total_iters
    assert output.cycles == certificate.cycles
    assert output.cycle_iters == certificate.cycle_iters
    for mine, theirs in zip(trace, oracle.trace):
        assert (mine.index, mine.cycle, mine.k, mine.mu) == (
            theirs.index,
            theirs.cycle,
            theirs.k,
            theirs.mu,
        )
        assert mine.z.equals(theirs.z)
        assert np.array_equal(mine.gamma_tilde, theirs.gamma_tilde)
    assert output.z_tilde.equals(BlockPoint(certificate.x, certificate.y, certificate.gamma_tilde))
    assert output.v.equals(certificate.v)


def test_nonconvergence_keeps_partial_trace():
    """Iteration limit raises with the trace collected so far."""
    problem = gen_lasso(10, 8, 0.1, seed=6)
    with pytest.raises(NonConvergenceError) as error:
        run(problem, _lasso_config(problem, rho=1e-10, max_inner_iters=3))
    assert error.value.trace.count == 3
    assert error.value.iterations == 3


def test_trace_thinning():
    """Beyond the full limit the trace keeps a window plus every stride-th record."""
    trace = IterateTrace(full_limit=10, window=3, stride=5)
    for index in range(1, 31):
        trace.append(_record(index))
    assert trace.truncated
    assert trace.count == 30
    assert [record.index for record in trace] == [5, 10, 15, 20, 25, 28, 29, 30]
    assert [(a.index, b.index) for a, b in trace.consecutive_pairs()] == [(28, 29), (29, 30)]


def test_trace_pairs_stay_in_cycle():
    """Consecutive indices across a cycle boundary are not paired."""
    trace = IterateTrace()
    trace.append(_record(1, cycle=1, k=1))
    trace.append(_record(2, cycle=1, k=2))
    trace.append(_record(3, cycle=2, k=1))
    assert not trace.truncated
    assert [(a.index, b.index) for a, b in trace.consecutive_pairs()] == [(1, 2)]


def test_record_dict_roundtrip():
    """IterateRecord survives to_dict / from_dict."""
    record = _record(7)
    restored = IterateRecord.from_dict(record.to_dict())
    assert restored.index == 7
    assert restored.z.equals(record.z)
