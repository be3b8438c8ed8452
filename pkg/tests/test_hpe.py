import numpy as np
import pytest

from drhpe.errors import NonConvergenceError, PsdViolationError, SingularSystemError
from drhpe.hpe import (
    AffineOperator,
    AffineProximalOracle,
    HpeParams,
    check_reldist,
    hpe_run,
    regularized_solution_affine,
)
from drhpe.operators import PsdOperator


def _random_pd_operator(rng, dim):
    """G = SPD + skew, so G + G' is positive definite."""
    M = rng.standard_normal((dim, dim))
    K = rng.standard_normal((dim, dim))
    return AffineOperator(M.T @ M + 0.1 * np.eye(dim) + (K - K.T), rng.standard_normal(dim))


def test_exact_oracle_first_step():
    """T(z) = z, z0 = 10, mu = 1: the first step is 20 / 3."""
    T = AffineOperator([[1.0]], [0.0])
    step = AffineProximalOracle(T, PsdOperator.identity(1)).produce(
        np.array([10.0]), 1.0, np.array([10.0])
    )
    assert step.z[0] == pytest.approx(20.0 / 3.0)
    assert np.array_equal(step.z, step.z_tilde)
    assert step.eta == 0.0


def test_regularized_solution_affine():
    """T(z) = z, z0 = 10, mu = 1 gives 5; a stationary z0 is its own regularized solution."""
    T = AffineOperator([[1.0]], [0.0])
    z_bar = regularized_solution_affine(T, [10.0], 1.0, PsdOperator.identity(1))
    assert z_bar[0] == pytest.approx(5.0)

    rng = np.random.default_rng(11)
    G = rng.standard_normal((3, 3))
    G = G.T @ G
    z0 = rng.standard_normal(3)
    T = AffineOperator(G, -G @ z0)
    assert np.allclose(regularized_solution_affine(T, z0, 0.3, PsdOperator.identity(3)), z0)


def test_regularized_solution_residual():
    """The regularized solution zeroes T(z) + mu M (z - z0)."""
    rng = np.random.default_rng(12)
    for _ in range(10):
        T = _random_pd_operator(rng, 4)
        M = PsdOperator.diagonal(rng.uniform(0.5, 2.0, 4))
        z0 = rng.standard_normal(4)
        z = regularized_solution_affine(T, z0, 0.25, M)
        assert np.linalg.norm(T(z) + 0.25 * M.apply(z - z0)) <= 1e-10


def test_check_reldist():
    """Closed form case and a z0 already in the zero set."""
    T = AffineOperator([[1.0]], [0.0])
    assert check_reldist(T, [10.0], 1.0, PsdOperator.identity(1))
    assert check_reldist(T, [0.0], 1.0, PsdOperator.identity(1))


def test_affine_operator_checks():
    """Non-monotone operators and inconsistent zero sets are rejected."""
    with pytest.raises(PsdViolationError):
        AffineOperator([[-1.0]], [0.0])
    with pytest.raises(SingularSystemError):
        AffineOperator([[0.0]], [1.0]).zeros()


def test_hpe_run_hand_recursion():
    """T(z) = 2z, z0 = 1, rho = 0.5: two cycles, three steps, z~ = 0.25."""
    T = AffineOperator([[2.0]], [0.0])
    M = PsdOperator.identity(1)
    output = hpe_run(
        AffineProximalOracle(T, M), np.array([1.0]), M, HpeParams(rho=0.5, record_history=True)
    )
    assert output.cycles == 2
    assert output.total_iters == 3
    assert output.cycle_iters == [2, 1]
    assert output.mu == 0.5
    assert output.z_tilde[0] == pytest.approx(0.25)
    assert output.residual == pytest.approx(0.5)
    assert [step.z[0] for step in output.history] == pytest.approx([0.5, 0.375, 0.25])


def test_hpe_run_cold_start():
    """Cold start restarts each cycle from z0."""
    T = AffineOperator([[2.0]], [0.0])
    M = PsdOperator.identity(1)
    output = hpe_run(
        AffineProximalOracle(T, M),
        np.array([1.0]),
        M,
        HpeParams(rho=0.5, warm_start=False, record_history=True),
    )
    first_of_cycle = [step for step in output.history if step.k == 1]
    assert all(step.z_prev[0] == 1.0 for step in first_of_cycle)
    assert output.residual <= 0.5


def test_mu_halves_dyadically():
    """mu in cycle c is exactly 2^-(c-1)."""
    rng = np.random.default_rng(13)
    T = _random_pd_operator(rng, 3)
    M = PsdOperator.identity(3)
    output = hpe_run(
        AffineProximalOracle(T, M), np.full(3, 5.0), M, HpeParams(rho=1e-8, record_history=True)
    )
    assert output.cycles > 1
    for step in output.history:
        assert step.mu == 2.0 ** -(step.cycle - 1)


def test_termination_residual_recomputed():
    """|v|_M <= rho holds when v is recomputed from the last step."""
    rng = np.random.default_rng(14)
    T = _random_pd_operator(rng, 5)
    M = PsdOperator.diagonal(rng.uniform(0.5, 2.0, 5))
    z0 = rng.standard_normal(5)
    output = hpe_run(AffineProximalOracle(T, M), z0, M, HpeParams(rho=1e-6, record_history=True))
    last = output.history[-1]
    v = last.z_prev - last.z - output.mu * (last.z_tilde - z0)
    assert M.norm(v) <= 1e-6
    assert M.norm(v) == pytest.approx(output.residual, abs=1e-12)


def test_proximal_point_degeneration():
    """sigma = eta0 = 0 with the exact oracle: z_k = z~_k and check_reldist holds."""
    rng = np.random.default_rng(15)
    for _ in range(50):
        dim = int(rng.integers(1, 6))
        T = _random_pd_operator(rng, dim)
        M = PsdOperator.diagonal(rng.uniform(0.5, 2.0, dim))
        z0 = rng.standard_normal(dim)
        output = hpe_run(
            AffineProximalOracle(T, M), z0, M, HpeParams(rho=1e-4, record_history=True)
        )
        for step in output.history:
            assert np.abs(step.z - step.z_tilde).max() <= 1e-12
        assert check_reldist(T, z0, output.mu, M)


def test_inner_loop_contracts():
    """Exact steps move monotonically toward the regularized solution."""
    rng = np.random.default_rng(16)
    T = _random_pd_operator(rng, 4)
    M = PsdOperator.identity(4)
    z0 = 3.0 * rng.standard_normal(4)
    output = hpe_run(AffineProximalOracle(T, M), z0, M, HpeParams(rho=1e-6, record_history=True))
    for cycle in range(1, output.cycles + 1):
        steps = [step for step in output.history if step.cycle == cycle]
        target = regularized_solution_affine(T, z0, steps[0].mu, M)
        distances = [M.norm(step.z - target) for step in steps]
        assert all(b <= a + 1e-12 for a, b in zip(distances, distances[1:]))


def test_nonconvergence_carries_history():
    """Step limit raises NonConvergenceError with the partial history."""
    T = AffineOperator([[2.0]], [0.0])
    M = PsdOperator.identity(1)
    with pytest.raises(NonConvergenceError) as error:
        hpe_run(
            AffineProximalOracle(T, M),
            np.array([1.0]),
            M,
            HpeParams(rho=1e-12, max_inner_iters=2, record_history=True),
        )
    assert len(error.value.trace) == 2
    assert error.value.iterations == 2


def test_cycle_limit():
    """max_cycles stops the halving."""
    T = AffineOperator([[2.0]], [0.0])
    M = PsdOperator.identity(1)
    with pytest.raises(NonConvergenceError):
        hpe_run(AffineProximalOracle(T, M), np.array([1.0]), M, HpeParams(rho=1e-12, max_cycles=1))


def test_error_contract_does_not_change_steps():
    """eta0, sigma and tau are carried for certification; the exact oracle ignores them."""
    rng = np.random.default_rng(17)
    T = _random_pd_operator(rng, 3)
    M = PsdOperator.identity(3)
    z0 = rng.standard_normal(3)
    plain = hpe_run(AffineProximalOracle(T, M), z0, M, HpeParams(rho=1e-6))
    loose = hpe_run(
        AffineProximalOracle(T, M), z0, M, HpeParams(rho=1e-6, eta0=2.0, sigma=0.9, tau=0.1)
    )
    assert loose.total_iters == plain.total_iters
    assert np.array_equal(loose.z_tilde, plain.z_tilde)


def test_params_validation():
    """mu0 is fixed at 1 and sigma must be below 1."""
    with pytest.raises(ValueError):
        HpeParams(mu0=0.5)
    with pytest.raises(ValueError):
        HpeParams(sigma=1.0)
