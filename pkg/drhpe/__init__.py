"""Base of drhpe module"""
from ._version import __version__

from .config import (
    CertifyConfig,
    Configuration,
    InstanceConfig,
    LoggingConfig,
    RegionConfig,
    RunConfig,
    SolverConfig,
    SweepConfig,
)
from .logger import Logger, LogStartEnd
from .operators import BlockPoint, PsdOperator, QMetric
from .objectives import ProxFunction, QuadraticFunction, SeparableProblem, kkt_residual
from .hpe import HpeParams, hpe_run
from .dradmm import DrAdmmConfig, DrAdmmOracle, run, stepsize_upper_bound, validate_config
from .certify import certify_run, find_tau, proposition_params, sigma_bar
from .controller import RunController
from .components.component import Component
from .examples import gen_eq_qp, gen_fused, gen_lasso, gen_trivial, get_example

__all__ = [
    "__version__",
    # component
    "Component",
    # config
    "CertifyConfig",
    "Configuration",
    "InstanceConfig",
    "LoggingConfig",
    "RegionConfig",
    "RunConfig",
    "SolverConfig",
    "SweepConfig",
    # controller
    "RunController",
    # logger
    "Logger",
    "LogStartEnd",
    # solver
    "BlockPoint",
    "PsdOperator",
    "QMetric",
    "ProxFunction",
    "QuadraticFunction",
    "SeparableProblem",
    "kkt_residual",
    "HpeParams",
    "hpe_run",
    "DrAdmmConfig",
    "DrAdmmOracle",
    "run",
    "stepsize_upper_bound",
    "validate_config",
    # certification
    "certify_run",
    "find_tau",
    "proposition_params",
    "sigma_bar",
    # instances
    "gen_eq_qp",
    "gen_fused",
    "gen_lasso",
    "gen_trivial",
    "get_example",
]
