"""Instance generators with planted KKT points, used by the CLI, sweeps and tests.

Families:
    lasso: 1/2 |Dx - d|^2 + lam |y|_1, x - y = 0
    fused: 1/2 |x - d|^2 + lam |y|_1, Dx - y = 0 with D the first-difference matrix
    eq_qp: two strictly convex quadratics under a random coupling constraint
    trivial: f = g = 0, x + y = 0, solved by the first iterate
"""

import os
from typing import Callable, Dict

import numpy as np
from scipy import linalg

from drhpe.config import InstanceConfig
from drhpe.errors import ConfigError, InstanceFormatError
from drhpe.objectives import (
    ProxFunction,
    QuadraticFunction,
    SeparableProblem,
    load_problem,
    save_problem,
)
from drhpe.operators import BlockPoint, PsdOperator

MAX_TRIES = 10
# support size of the planted lasso solution relative to min(n, m)
LASSO_SPARSITY = 0.05

_DEFAULT_EXAMPLE_SUBDIR = "instances"


def _lasso_support_size(n: int, m: int) -> int:
    if min(n, m) < 2:
        return 0
    return max(1, int(LASSO_SPARSITY * min(n, m)))


def gen_lasso(n: int, m: int, lam: float, seed: int = 0) -> SeparableProblem:
    """LASSO split with a planted sparse solution.

    D has unit-norm Gaussian columns. The residual r = Dx* - d solves
    D_S'r = -lam sign(x*_S) with minimum norm, so gamma* = D'r is a valid
    multiplier whenever |D_j'r| <= lam off the support; draws that miss this
    are redrawn from the same generator.

    Raises:
        ConfigError: n or m below 1, or lam negative
        InstanceFormatError: no valid draw in MAX_TRIES attempts
    """
    if n < 1 or m < 1 or lam < 0:
        raise ConfigError(f"lasso needs n, m >= 1 and lam >= 0, got n={n}, m={m}, lam={lam}")
    rng = np.random.default_rng(seed)
    support_size = _lasso_support_size(n, m)
    for _ in range(MAX_TRIES):
        D = rng.standard_normal((m, n))
        D /= np.maximum(np.linalg.norm(D, axis=0), 1e-12)
        x_star = np.zeros(n)
        if support_size == 0:
            r = rng.standard_normal(m)
            peak = float(np.abs(D.T @ r).max())
            r = r * (0.5 * lam / peak) if peak > 0 else np.zeros(m)
        else:
            support = rng.choice(n, size=support_size, replace=False)
            signs = rng.choice([-1.0, 1.0], size=support_size)
            x_star[support] = signs * (1.0 + np.abs(rng.standard_normal(support_size)))
            r, *_ = linalg.lstsq(D[:, support].T, -lam * signs)
            off_support = np.setdiff1d(np.arange(n), support)
            if off_support.size and np.abs(D[:, off_support].T @ r).max() > lam:
                continue
        d = D @ x_star - r
        gamma_star = D.T @ r
        f = QuadraticFunction(PsdOperator.gram(D), -(D.T @ d), 0.5 * float(d @ d))
        try:
            return SeparableProblem(
                f=f,
                g=ProxFunction.l1(n, lam),
                A=np.eye(n),
                B=-np.eye(n),
                b=np.zeros(n),
                known_solution=BlockPoint(x_star, x_star.copy(), gamma_star),
                name=f"lasso-n{n}-m{m}-s{seed}",
            )
        except InstanceFormatError:
            continue
    raise InstanceFormatError(f"lasso n={n} m={m}: no valid planted solution in {MAX_TRIES} draws")


def difference_matrix(n: int) -> np.ndarray:
    """(n-1) x n first-difference matrix, (Dx)_j = x_{j+1} - x_j."""
    return np.eye(n - 1, n, k=1) - np.eye(n - 1, n)


def gen_fused(n: int, lam: float, seed: int = 0) -> SeparableProblem:
    """Fused LASSO (1D total variation) with a piecewise constant planted signal.

    Raises:
        ConfigError: n < 2 or lam negative
    """
    if n < 2 or lam < 0:
        raise ConfigError(f"fused needs n >= 2 and lam >= 0, got n={n}, lam={lam}")
    rng = np.random.default_rng(seed)
    D = difference_matrix(n)
    jumps = np.sort(rng.choice(np.arange(1, n), size=max(1, (n - 1) // 10), replace=False))
    levels = rng.standard_normal(jumps.size + 1) * 2.0
    x_star = np.repeat(levels, np.diff(np.concatenate(([0], jumps, [n]))))
    y_star = D @ x_star
    # exact zeros off the jumps
    y_star[np.abs(y_star) < 1e-14] = 0.0
    gamma_star = rng.uniform(-0.5 * lam, 0.5 * lam, size=n - 1)
    moving = y_star != 0
    gamma_star[moving] = -lam * np.sign(y_star[moving])
    d = x_star - D.T @ gamma_star
    return SeparableProblem(
        f=QuadraticFunction(PsdOperator.identity(n), -d, 0.5 * float(d @ d)),
        g=ProxFunction.l1(n - 1, lam),
        A=D,
        B=-np.eye(n - 1),
        b=np.zeros(n - 1),
        known_solution=BlockPoint(x_star, y_star, gamma_star),
        name=f"fused-n{n}-s{seed}",
    )


def _random_spd(rng: np.random.Generator, dim: int) -> np.ndarray:
    M = rng.standard_normal((dim, dim))
    return M.T @ M / dim + np.eye(dim)


def gen_eq_qp(n: int, p: int, m: int, seed: int = 0) -> SeparableProblem:
    """Strictly convex quadratics f, g with random A, B, b.

    The KKT point comes from one linear solve.

    Raises:
        ConfigError: a dimension below 1 or m > n + p
        InstanceFormatError: the KKT system stayed singular for MAX_TRIES draws
    """
    if min(n, p, m) < 1 or m > n + p:
        raise ConfigError(f"eq_qp needs dims >= 1 and m <= n + p, got n={n}, p={p}, m={m}")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_TRIES):
        P_f, P_g = _random_spd(rng, n), _random_spd(rng, p)
        q_f, q_g = rng.standard_normal(n), rng.standard_normal(p)
        A = rng.standard_normal((m, n)) / np.sqrt(m)
        B = rng.standard_normal((m, p)) / np.sqrt(m)
        b = rng.standard_normal(m)
        kkt = np.block(
            [
                [P_f, np.zeros((n, p)), -A.T],
                [np.zeros((p, n)), P_g, -B.T],
                [A, B, np.zeros((m, m))],
            ]
        )
        try:
            solution = linalg.solve(kkt, np.concatenate([-q_f, -q_g, b]))
        except (linalg.LinAlgError, ValueError):
            continue
        try:
            return SeparableProblem(
                f=QuadraticFunction(PsdOperator.dense(P_f), q_f),
                g=QuadraticFunction(PsdOperator.dense(P_g), q_g),
                A=A,
                B=B,
                b=b,
                known_solution=BlockPoint.from_flat(solution, n, p, m),
                name=f"eq_qp-n{n}-p{p}-m{m}-s{seed}",
            )
        except InstanceFormatError:
            continue
    raise InstanceFormatError(f"eq_qp n={n} p={p} m={m}: singular KKT system in {MAX_TRIES} draws")


def gen_trivial(n: int = 1) -> SeparableProblem:
    """f = g = 0, A = B = I, b = 0; the origin is the known solution."""
    if n < 1:
        raise ConfigError(f"trivial needs n >= 1, got {n}")
    return SeparableProblem(
        f=ProxFunction.zero(n),
        g=ProxFunction.zero(n),
        A=np.eye(n),
        B=np.eye(n),
        b=np.zeros(n),
        known_solution=BlockPoint.zeros(n, n, n),
        name=f"trivial-n{n}",
    )


def instance_from_config(config: InstanceConfig, seed_offset: int = 0) -> SeparableProblem:
    """Generate (or load) the instance an InstanceConfig describes.

    Args:
        config: instance section
        seed_offset: added to config.seed (sweep repetitions)
    """
    seed = config.seed + seed_offset
    if config.family == "file":
        return load_problem(config.path)
    if config.family == "lasso":
        return gen_lasso(config.n, config.m, config.lam, seed)
    if config.family == "fused":
        return gen_fused(config.n, config.lam, seed)
    if config.family == "eq_qp":
        return gen_eq_qp(config.n, config.p, config.m, seed)
    return gen_trivial(config.n)


_EXAMPLES: Dict[str, Callable[[], SeparableProblem]] = {
    "lasso": lambda: gen_lasso(20, 10, 0.1, 0),
    "fused": lambda: gen_fused(20, 0.5, 0),
    "eq_qp": lambda: gen_eq_qp(10, 10, 6, 0),
    "trivial": lambda: gen_trivial(1),
}


def get_example(
    example_name: str = "lasso",
    example_subdir: str = _DEFAULT_EXAMPLE_SUBDIR,
    root_dir: str = ".",
) -> str:
    """Returns the path of a named example instance file; writes it if missing.

    Args:
        example_name (str, optional): one of lasso, fused, eq_qp, trivial. Defaults to lasso.
        example_subdir (str, optional): where to find instances within root dir.
        root_dir (str, optional): root directory. Defaults to the working directory.

    Raises:
        KeyError: unknown example name

    Returns:
        str: path to the instance JSON file
    """
    if example_name not in _EXAMPLES:
        raise KeyError(f"unknown example {example_name}, use one of {', '.join(_EXAMPLES)}")
    _example_dir = os.path.join(root_dir, example_subdir)
    _this_example = os.path.join(_example_dir, f"{example_name}.json")
    if os.path.isfile(_this_example):
        return _this_example
    os.makedirs(_example_dir, exist_ok=True)
    save_problem(_EXAMPLES[example_name](), _this_example)
    return _this_example
