"""Single DR-ADMM solve of the configured instance."""

import json
from typing import Optional

import numpy as np

from drhpe.components.component import Component
from drhpe.dradmm import Certificate, DrAdmmConfig, default_rs_blocks, run, validate_parameters
from drhpe.examples import instance_from_config
from drhpe.logger import LogStartEnd
from drhpe.objectives import SeparableProblem, kkt_residual
from drhpe.tracefile import TraceWriter


def solver_config(problem: SeparableProblem, solver, trace_enabled: bool = False) -> DrAdmmConfig:
    """DrAdmmConfig for a [solver] section on problem, R and S from solver.rs."""
    R, S = default_rs_blocks(problem, solver.rs)
    return DrAdmmConfig(
        beta=solver.beta,
        theta=solver.theta,
        alpha=solver.alpha,
        rho=solver.rho,
        R=R,
        S=S,
        max_cycles=solver.max_cycles,
        max_inner_iters=solver.max_inner_iters,
        trace_enabled=trace_enabled,
        warm_start=solver.warm_start,
    )


class SolveComponent(Component):
    """Solve config.instance with config.solver; optionally write the iterate trace.

    After run(), `certificate` holds the result and `summary` the logged key values,
    which are also written to <output_dir>/solve_summary.json.
    """

    def __init__(self, controller):
        super().__init__(controller)
        self.problem: Optional[SeparableProblem] = None
        self.certificate: Optional[Certificate] = None
        self.summary = {}

    def validate_inputs(self):
        solver = self.config.solver
        validate_parameters(solver.beta, solver.theta, solver.alpha, solver.rho)

    @LogStartEnd("solve", level="STATUS")
    def run(self):
        solver = self.config.solver
        self.problem = instance_from_config(self.config.instance)
        cfg = solver_config(self.problem, solver)
        if solver.trace_file:
            with TraceWriter(self.get_output_path(solver.trace_file), self.problem, cfg) as writer:
                self.certificate, _ = run(self.problem, cfg, self.logger, trace_writer=writer)
        else:
            self.certificate, _ = run(self.problem, cfg, self.logger)
        self._summarize()

    def _summarize(self):
        certificate = self.certificate
        self.summary = {
            "instance": self.problem.name,
            "theta": self.config.solver.theta,
            "alpha": self.config.solver.alpha,
            "beta": self.config.solver.beta,
            "rho": self.config.solver.rho,
            "residual": certificate.residual,
            "cycles": certificate.cycles,
            "iterations": certificate.total_iters,
            "objective": self.problem.objective_value(certificate.x, certificate.y),
            "kkt_residual": kkt_residual(
                self.problem, certificate.x, certificate.y, certificate.gamma_tilde
            ),
        }
        if self.problem.known_solution is not None:
            known = self.problem.known_solution
            self.summary["distance_to_known"] = float(
                np.linalg.norm(np.concatenate([certificate.x - known.x, certificate.y - known.y]))
            )
        self.logger.log_dict(self.summary, level="STATUS")
        with open(self.get_output_path("solve_summary.json"), "w", encoding="utf-8") as out:
            json.dump({"summary": self.summary, "certificate": certificate.to_dict()}, out)
