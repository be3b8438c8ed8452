import os

import numpy as np
import pytest

from drhpe.config import InstanceConfig
from drhpe.errors import ConfigError
from drhpe.examples import (
    difference_matrix,
    gen_eq_qp,
    gen_fused,
    gen_lasso,
    gen_trivial,
    get_example,
    instance_from_config,
)
from drhpe.objectives import kkt_residual, load_problem


@pytest.mark.parametrize(
    "problem",
    [
        gen_lasso(20, 10, 0.1, seed=0),
        gen_lasso(8, 30, 0.5, seed=1),
        gen_lasso(1, 1, 0.3, seed=2),
        gen_fused(15, 0.5, seed=0),
        gen_fused(2, 1.0, seed=3),
        gen_eq_qp(10, 10, 6, seed=0),
        gen_eq_qp(3, 2, 5, seed=4),
        gen_trivial(4),
    ],
    ids=lambda problem: problem.name,
)
def test_known_solution_is_kkt_point(problem):
    """Every generator plants a KKT point."""
    z = problem.known_solution
    assert kkt_residual(problem, z.x, z.y, z.gamma) <= 1e-8


def test_lasso_structure():
    """Unit-norm data columns and the x - y = 0 split."""
    problem = gen_lasso(12, 9, 0.2, seed=5)
    assert np.array_equal(problem.A, np.eye(12))
    assert np.array_equal(problem.B, -np.eye(12))
    assert problem.name == "lasso-n12-m9-s5"
    assert np.count_nonzero(problem.known_solution.x) == 1


def test_generators_are_deterministic():
    """Same seed, same instance; another seed, another instance."""
    assert np.array_equal(gen_eq_qp(5, 4, 3, seed=7).A, gen_eq_qp(5, 4, 3, seed=7).A)
    assert not np.array_equal(gen_eq_qp(5, 4, 3, seed=7).A, gen_eq_qp(5, 4, 3, seed=8).A)


def test_difference_matrix():
    """(Dx)_j = x_{j+1} - x_j."""
    D = difference_matrix(4)
    assert D.shape == (3, 4)
    assert np.array_equal(D @ np.array([1.0, 4.0, 9.0, 16.0]), [3.0, 5.0, 7.0])


def test_generator_argument_errors():
    """Bad dimensions are configuration errors."""
    with pytest.raises(ConfigError):
        gen_eq_qp(2, 2, 5)
    with pytest.raises(ConfigError):
        gen_fused(1, 0.5)
    with pytest.raises(ConfigError):
        gen_lasso(0, 3, 0.1)
    with pytest.raises(ConfigError):
        gen_trivial(0)


def test_instance_from_config(tmp_path):
    """Families dispatch to their generators; seed_offset shifts the seed."""
    problem = instance_from_config(InstanceConfig(family="fused", n=12, lam=0.5, seed=2))
    assert problem.name == "fused-n12-s2"
    problem = instance_from_config(InstanceConfig(family="eq_qp", n=4, p=3, m=2), seed_offset=3)
    assert problem.name == "eq_qp-n4-p3-m2-s3"

    path = get_example("trivial", root_dir=str(tmp_path))
    assert instance_from_config(InstanceConfig(family="file", path=path)).name == "trivial-n1"


def test_get_example(tmp_path):
    """The example file is written once and found afterwards."""
    path = get_example("lasso", root_dir=str(tmp_path))
    assert path == os.path.join(str(tmp_path), "instances", "lasso.json")
    modified = os.path.getmtime(path)
    assert get_example("lasso", root_dir=str(tmp_path)) == path
    assert os.path.getmtime(path) == modified
    assert load_problem(path).name == "lasso-n20-m10-s0"
    with pytest.raises(KeyError):
        get_example("missing", root_dir=str(tmp_path))
