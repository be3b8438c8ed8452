"""RunController - session controller and command line driver.

Main interface to run drhpe components. Provide one or more configuration
files in .toml format (by convention a solver.toml and a components.toml)

  Typical usage example:
  from drhpe.controller import RunController
  controller = RunController(["configs/solver.toml", "configs/sweep.toml"])
  controller.run()

  Or from the command-line:
  drhpe run --config configs/solver.toml configs/sweep.toml
  drhpe solve --instance lasso.json --theta 1.6 --alpha 10 --beta 1 --rho 1e-6

Exit codes: 0 converged / certified, 2 non-convergence, 3 certification
failure, 4 configuration or input error.
"""

import argparse
import os
import sys
from typing import List, Optional, Union

from pydantic import ValidationError

from drhpe.components.certify_trace import CertifyComponent
from drhpe.components.component import Component
from drhpe.components.region import RegionComponent
from drhpe.components.solve import SolveComponent
from drhpe.components.sweep import SweepComponent
from drhpe.config import (
    CertifyConfig,
    Configuration,
    InstanceConfig,
    LoggingConfig,
    RegionConfig,
    RunConfig,
    SolverConfig,
    _load_toml,
)
from drhpe.errors import DrhpeError
from drhpe.logger import LEVELS, Logger
from drhpe.tools import parse_grid

# mapping from names referenced in config.run to component classes
# NOTE: component names also listed as literal in drhpe.config for validation
component_cls_map = {
    "solve": SolveComponent,
    "sweep": SweepComponent,
    "certify": CertifyComponent,
    "region": RegionComponent,
}

EXIT_OK = 0
EXIT_INPUT = 4


class RunController:
    """Main operational interface for sessions.

    Provide one or more config files in TOML (*.toml) format, or a ready
    Configuration, and a run directory. If the run directory is not provided
    the directory of the first config file (or the working directory) is used.

    Properties:
        config: root Configuration object
        logger: logger object
        run_dir: root directory for relative paths
        component: current running (or last started) Component object
        completed_components: list of (name, Component) which have completed
    """

    def __init__(
        self,
        config_file: Union[List[str], str, Configuration] = None,
        run_dir: str = None,
    ):
        if isinstance(config_file, Configuration):
            self.config = config_file
            default_dir = os.getcwd()
        else:
            if not isinstance(config_file, list):
                config_file = [config_file]
            self.config = Configuration.load_toml(config_file)
            default_dir = os.path.dirname(config_file[0])
        self._run_dir = os.path.abspath(run_dir if run_dir is not None else default_dir)
        self.logger = Logger(self.config.logging.level, self.config.logging.log_file)
        self.completed_components = []

        # mapping from defined names referenced in config to Component objects
        self._component_map = {k: v(self) for k, v in component_cls_map.items()}
        self._component = None
        self._queued_components = [
            (name, self._component_map[name]) for name in self.config.run.components
        ]

    @property
    def run_dir(self) -> str:
        """The root directory of the session"""
        return self._run_dir

    @property
    def component(self) -> Component:
        """Current component"""
        return self._component

    def get_component(self, name: str) -> Component:
        """The component instance registered under name"""
        return self._component_map[name]

    def run(self):
        """Main interface to run the configured components"""
        self.validate_inputs()
        for name, component in self._queued_components:
            self._component = component
            component.run()
            self.completed_components.append((name, component))

    def validate_inputs(self):
        """Validate input state prior to run"""
        already_validated_components = set()
        for name, component in self._queued_components:
            if name not in already_validated_components:
                component.validate_inputs()
                already_validated_components.add(name)


def _add_logging_args(parser: argparse.ArgumentParser):
    parser.add_argument("--log-level", default="INFO", choices=list(LEVELS))
    parser.add_argument("--log-file", default=None)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the drhpe command."""
    parser = argparse.ArgumentParser(
        prog="drhpe",
        description="Dynamic regularized ADMM solver, certification and benchmarks.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser(
        "solve",
        help="solve one instance file",
        description="Defaults: beta=1, theta=1.6, alpha=10; R=S=0 where the subproblems allow,"
        " else R = |A|^2 I (resp. S = |B|^2 I).",
    )
    solve.add_argument("--instance", required=True, help="instance JSON file")
    solve.add_argument("--theta", type=float, default=1.6)
    solve.add_argument("--alpha", type=float, default=10.0)
    solve.add_argument("--beta", type=float, default=1.0)
    solve.add_argument("--rho", type=float, default=1e-6)
    solve.add_argument("--rs", default="auto", help="zero, auto or scaled:r,s")
    solve.add_argument("--trace", default=None, help="JSON lines iterate trace output")
    solve.add_argument("--max-inner-iters", type=int, default=1_000_000)
    solve.add_argument("--max-cycles", type=int, default=60)
    solve.add_argument("--cold-start", action="store_true", help="restart cycles from z0")
    solve.add_argument("--out-dir", default=".")
    _add_logging_args(solve)

    sweep = commands.add_parser("sweep", help="run a parameter sweep from a TOML spec")
    sweep.add_argument("--spec", required=True, help="TOML file with a [sweep] table")
    sweep.add_argument("--out", default=None, help="CSV output, overrides sweep.out")
    _add_logging_args(sweep)

    certify = commands.add_parser("certify", help="certify a trace written by solve --trace")
    certify.add_argument("--trace", required=True)
    certify.add_argument("--report", required=True)
    certify.add_argument("--d0", type=float, default=None, help="bound on |z0 - z*|_Q")
    certify.add_argument("--tolerance", type=float, default=1e-8)
    _add_logging_args(certify)

    region = commands.add_parser("region", help="feasibility map of the analysis constants")
    region.add_argument("--alpha-grid", required=True, help="a,b,c or start:stop:num")
    region.add_argument("--theta-grid", required=True, help="a,b,c or start:stop:num")
    region.add_argument("--out", default="region.csv")
    _add_logging_args(region)

    session = commands.add_parser("run", help="run the components of TOML config files")
    session.add_argument("--config", nargs="+", required=True)
    session.add_argument("--run-dir", default=None)
    return parser


def configuration_from_args(args: argparse.Namespace) -> Configuration:
    """Configuration equivalent to a solve, sweep, certify or region command line."""
    logging = LoggingConfig(level=args.log_level, log_file=args.log_file)
    if args.command == "solve":
        return Configuration(
            run=RunConfig(components=("solve",), output_dir=args.out_dir),
            solver=SolverConfig(
                theta=args.theta,
                alpha=args.alpha,
                beta=args.beta,
                rho=args.rho,
                rs=args.rs,
                max_cycles=args.max_cycles,
                max_inner_iters=args.max_inner_iters,
                warm_start=not args.cold_start,
                trace_file=args.trace,
            ),
            instance=InstanceConfig(family="file", path=args.instance),
            logging=logging,
        )
    if args.command == "sweep":
        data = _load_toml(args.spec)
        data.setdefault("run", {"components": ["sweep"]})
        data.setdefault("logging", {"level": args.log_level, "log_file": args.log_file})
        if args.out is not None:
            data.setdefault("sweep", {})["out"] = args.out
        return Configuration(**data)
    if args.command == "certify":
        return Configuration(
            run=RunConfig(components=("certify",)),
            certify=CertifyConfig(
                trace=args.trace, report=args.report, d0=args.d0, tolerance=args.tolerance
            ),
            logging=logging,
        )
    return Configuration(
        run=RunConfig(components=("region",)),
        region=RegionConfig(
            alpha_grid=parse_grid(args.alpha_grid),
            theta_grid=parse_grid(args.theta_grid),
            out=args.out,
        ),
        logging=logging,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Command line entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            controller = RunController(args.config, args.run_dir)
        else:
            controller = RunController(configuration_from_args(args), os.getcwd())
        controller.run()
    except DrhpeError as error:
        print(f"drhpe: {error.__class__.__name__}: {error}", file=sys.stderr)
        return error.exit_code
    except (ValidationError, ValueError, OSError) as error:
        print(f"drhpe: {error.__class__.__name__}: {error}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
