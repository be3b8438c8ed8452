"""Config implementation and schema.
"""
# pylint: disable=too-many-instance-attributes

from abc import ABC
from dataclasses import field as dataclass_field
from typing import List, Optional, Tuple, Union

import toml
from pydantic import Field, validator
from pydantic.dataclasses import dataclass
from typing_extensions import Literal

from drhpe.errors import ConfigError
from drhpe.tools import parse_num_processors, parse_rs


class ConfigItem(ABC):
    """Base class to add partial dict-like interface to drhpe configuration.

    Allow use of .items() ["X"] and .get("X") from configuration.

    Not to be constructed directly. To be used a mixin for dataclasses
    representing config schema.
    Do not use "get" or "items" for key names.
    """

    def __getitem__(self, key):
        return getattr(self, key)

    def items(self):
        """D.items() -> a set-like object providing a view on D's items"""
        return self.__dict__.items()

    def get(self, key, default=None):
        """Return the value for key if key is in the dictionary, else default."""
        return self.__dict__.get(key, default)


ComponentNames = Literal["solve", "sweep", "certify", "region"]
InstanceFamilies = Literal["lasso", "fused", "eq_qp", "trivial", "file"]
LogLevels = Literal["DEBUG", "INFO", "STATUS", "WARN", "ERROR"]


@dataclass(frozen=True)
class RunConfig(ConfigItem):
    """Session parameters

    Properties:
        components: components to run, in order
        output_dir: directory for relative output paths
    """

    components: Tuple[ComponentNames, ...]
    output_dir: str = Field(default=".")


@dataclass(frozen=True)
class SolverConfig(ConfigItem):
    """DR-ADMM parameters for a single solve

    Algorithm hypotheses (beta > 0, rho > 0, alpha >= 0, theta inside the
    stepsize domain) are checked by drhpe.dradmm.validate_config, which raises
    one error class per violated condition.

    Properties:
        theta: stepsize
        alpha: proximal factor
        beta: penalty
        rho: tolerance
        rs: proximal matrices, "zero", "auto" or "scaled:r,s"
        max_cycles: regularization cycles before giving up
        max_inner_iters: total iterations before giving up
        warm_start: start a new cycle from the last iterate
        trace_file: optional JSON lines iterate trace
    """

    theta: float = Field(default=1.6)
    alpha: float = Field(default=10.0)
    beta: float = Field(default=1.0)
    rho: float = Field(default=1e-6)
    rs: str = Field(default="auto")
    max_cycles: int = Field(default=60, ge=1)
    max_inner_iters: int = Field(default=1_000_000, ge=1)
    warm_start: bool = Field(default=True)
    trace_file: Optional[str] = Field(default=None)

    @validator("rs")
    def rs_parses(cls, value):
        """Validate rs is zero, auto or scaled:r,s"""
        parse_rs(value)
        return value


@dataclass(frozen=True)
class InstanceConfig(ConfigItem):
    """Problem instance: a generated family or an instance file

    Properties:
        family: lasso, fused, eq_qp, trivial or file
        path: instance JSON path, required for family "file"
        n, p, m: dimensions (each family uses the ones it needs)
        lam: l1 weight for lasso and fused
        seed: generator seed
    """

    family: InstanceFamilies = Field(default="lasso")
    path: Optional[str] = Field(default=None)
    n: int = Field(default=20, ge=1)
    p: int = Field(default=20, ge=1)
    m: int = Field(default=10, ge=1)
    lam: float = Field(default=0.1, ge=0)
    seed: int = Field(default=0, ge=0)

    @validator("path", always=True)
    def path_for_file_family(cls, value, values):
        """Validate path is given when family is file"""
        if values.get("family") == "file":
            assert value, "path is required for family 'file'"
        return value

    @property
    def label(self) -> str:
        """Instance id used in run records."""
        if self.family == "file":
            return self.path
        return f"{self.family}-n{self.n}-p{self.p}-m{self.m}-s{self.seed}"


@dataclass(frozen=True)
class SweepConfig(ConfigItem):
    """Parameter sweep over one instance

    Properties:
        instance: the instance to sweep
        rho, theta, alpha, beta: value lists, all combinations are run
        rs: proximal matrices strategy for every run
        repetitions: runs per combination
        seed: base seed; repetition r solves the instance generated from seed + r
        num_processors: worker count, "MAX", "MAX-N" or an integer
        out: CSV output path
        certify: certify each converged run
        max_inner_iters: iteration limit per run
    """

    instance: InstanceConfig
    rho: Tuple[float, ...] = Field(default=(1e-1, 1e-2, 1e-3, 1e-4))
    theta: Tuple[float, ...] = Field(default=(1.6,))
    alpha: Tuple[float, ...] = Field(default=(10.0,))
    beta: Tuple[float, ...] = Field(default=(1.0,))
    rs: str = Field(default="auto")
    repetitions: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    num_processors: str = Field(default="1", regex=r"(?i)^MAX$|^MAX[\s]*-[\s]*[\d]+$|^[\d]+$")
    out: str = Field(default="sweep.csv")
    certify: bool = Field(default=True)
    max_inner_iters: int = Field(default=1_000_000, ge=1)

    @validator("rs")
    def rs_parses(cls, value):
        """Validate rs is zero, auto or scaled:r,s"""
        parse_rs(value)
        return value

    @property
    def workers(self) -> int:
        """Number of worker processes."""
        return parse_num_processors(self.num_processors)


@dataclass(frozen=True)
class CertifyConfig(ConfigItem):
    """Trace certification

    Properties:
        trace: JSON lines trace written by a solve
        report: text report path; a .json sibling holds the key-value form
        d0: optional upper bound on the distance from z0 to the solution set;
            defaults to |z0 - z*|_Q when the instance carries a known solution
        tolerance: relative tolerance of the inclusion and error checks
    """

    trace: str
    report: str
    d0: Optional[float] = Field(default=None, ge=0)
    tolerance: float = Field(default=1e-8, gt=0)


@dataclass(frozen=True)
class RegionConfig(ConfigItem):
    """Feasibility map of the analysis constants over (alpha, theta)

    Properties:
        alpha_grid: alpha values
        theta_grid: theta values
        out: CSV output path
    """

    alpha_grid: Tuple[float, ...]
    theta_grid: Tuple[float, ...]
    out: str = Field(default="region.csv")


@dataclass(frozen=True)
class LoggingConfig(ConfigItem):
    """Logging parameters

    Properties:
        level: threshold, DEBUG, INFO, STATUS, WARN or ERROR
        log_file: optional file receiving a copy of every record
    """

    level: LogLevels = Field(default="INFO")
    log_file: Optional[str] = Field(default=None)


@dataclass(frozen=True)
class Configuration(ConfigItem):
    """Configuration: root of the session configuration"""

    run: RunConfig
    solver: SolverConfig = dataclass_field(default_factory=SolverConfig)
    instance: InstanceConfig = dataclass_field(default_factory=InstanceConfig)
    sweep: Optional[SweepConfig] = Field(default=None)
    certify: Optional[CertifyConfig] = Field(default=None)
    region: Optional[RegionConfig] = Field(default=None)
    logging: LoggingConfig = dataclass_field(default_factory=LoggingConfig)

    @classmethod
    def load_toml(cls, path: Union[str, List[str]]):
        """Load configuration from .toml files(s)

        A session is commonly split into a solver/instance file and a
        component file.

        Args:
            path: a valid system path to a TOML format config file or list of paths

        Returns:
            A Configuration object
        """
        if isinstance(path, str):
            path = [path]
        data = _load_toml(path[0])
        for path_item in path[1:]:
            _merge_dicts(data, _load_toml(path_item))
        return cls(**data)

    @validator("sweep", "certify", "region", always=True)
    def section_for_component(cls, value, values, field):
        """Validate every component listed in run has its section"""
        run = values.get("run")
        if run is not None and field.name in run.components:
            assert value is not None, f"[{field.name}] section required by run.components"
        return value


def _load_toml(path: str) -> dict:
    """Load config from toml file at path"""
    with open(path, "r", encoding="utf-8") as toml_file:
        data = toml.load(toml_file)
    return data


def _merge_dicts(right, left, path=None):
    """Merges the contents of nested dict left into nested dict right.

    Raises errors in case of namespace conflicts.
    Args:
        right: dict, modified in place
        left: dict to be merged into right
        path: default None, sequence of keys to be reported in case of
            error in merging nested dictionaries
    """
    if path is None:
        path = []
    for key in left:
        if key in right:
            if isinstance(right[key], dict) and isinstance(left[key], dict):
                _merge_dicts(right[key], left[key], path + [str(key)])
            else:
                path = ".".join(path + [str(key)])
                raise ConfigError(f"duplicate keys in source .toml files: {path}")
        else:
            right[key] = left[key]
