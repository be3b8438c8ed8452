"""Parameter sweeps and the iteration-complexity fit.

A sweep runs DR-ADMM on every combination of (repetition, rho, theta, alpha,
beta), certifies each converged run and writes one RunRecord per row. Runs are
independent and go to a process pool; results are collected in task order so
the CSV is identical across worker counts apart from the wall_time column.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from drhpe.certify import certify_run
from drhpe.components.component import Component
from drhpe.components.solve import solver_config
from drhpe.config import InstanceConfig, SolverConfig, SweepConfig
from drhpe.dradmm import build_metric, run, validate_parameters
from drhpe.errors import DrhpeError, InsufficientDataError, NonConvergenceError
from drhpe.examples import instance_from_config
from drhpe.logger import Logger, LogStartEnd

# sweeps are described by the [sweep] configuration section
SweepSpec = SweepConfig

CSV_HEADER = "# drhpe-runrecord v1"
MIN_FIT_POINTS = 4
MIN_FIT_DECADES = 3.0


@dataclass
class RunRecord:
    """One sweep run

    status is "converged", "nonconvergence" or "error"; certified is empty
    unless the run converged and the sweep certifies.
    """

    instance: str
    repetition: int
    theta: float
    alpha: float
    beta: float
    rho: float
    status: str
    iterations: int
    cycles: int
    wall_time: float
    residual: float
    certified: Optional[bool] = None
    certificate_residual: Optional[float] = None
    message: str = ""


def _tasks(spec: SweepSpec) -> List[Dict[str, Any]]:
    return [
        {
            "instance": asdict(spec.instance),
            "seed_offset": spec.seed + repetition,
            "repetition": repetition,
            "rho": rho,
            "theta": theta,
            "alpha": alpha,
            "beta": beta,
            "rs": spec.rs,
            "max_inner_iters": spec.max_inner_iters,
            "certify": spec.certify,
        }
        for repetition, rho, theta, alpha, beta in product(
            range(spec.repetitions), spec.rho, spec.theta, spec.alpha, spec.beta
        )
    ]


def _run_task(task: Dict[str, Any]) -> RunRecord:
    """Worker entry point; failures become records."""
    instance = InstanceConfig(**task["instance"])
    keys = {k: task[k] for k in ("theta", "alpha", "beta", "rho")}
    label = instance.label
    started = time.perf_counter()

    def failed(status: str, error: Exception, iterations: int = 0) -> RunRecord:
        return RunRecord(
            label,
            task["repetition"],
            status=status,
            iterations=iterations,
            cycles=0,
            wall_time=time.perf_counter() - started,
            residual=float("nan"),
            message=str(error),
            **keys,
        )

    try:
        problem = instance_from_config(instance, seed_offset=task["seed_offset"])
        label = problem.name
        solver = SolverConfig(rs=task["rs"], max_inner_iters=task["max_inner_iters"], **keys)
        cfg = solver_config(problem, solver, trace_enabled=task["certify"])
        certificate, trace = run(problem, cfg)
    except NonConvergenceError as error:
        return failed("nonconvergence", error, error.iterations)
    except DrhpeError as error:
        return failed("error", error)
    record = RunRecord(
        label,
        task["repetition"],
        status="converged",
        iterations=certificate.total_iters,
        cycles=certificate.cycles,
        wall_time=time.perf_counter() - started,
        residual=certificate.residual,
        **keys,
    )
    if task["certify"]:
        _, _, z0 = cfg.blocks(problem)
        report = certify_run(
            problem, build_metric(problem, cfg), z0, trace, certificate, rho=cfg.rho
        )
        record.certified = report.passed
        record.certificate_residual = report.check("certificate").worst
    return record


def run_sweep(
    spec: SweepSpec,
    logger: Optional[Logger] = None,
    workers: Optional[int] = None,
    out: Optional[str] = None,
) -> List[RunRecord]:
    """Run every combination of a sweep.

    Args:
        spec: the sweep
        logger: optional logger, one INFO record per run
        workers: process count; defaults to spec.workers, 1 runs in this process
        out: CSV path; nothing is written when None

    Raises:
        ConfigError subclasses: a parameter combination violates the method's hypotheses
    """
    logger = logger or Logger.quiet()
    for rho, theta, alpha, beta in product(spec.rho, spec.theta, spec.alpha, spec.beta):
        validate_parameters(beta, theta, alpha, rho)
    tasks = _tasks(spec)
    workers = spec.workers if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        records = [_run_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            records = list(executor.map(_run_task, tasks))
    for record in records:
        logger.log_time(
            f"{record.instance} rho={record.rho:g} theta={record.theta:g} alpha={record.alpha:g}"
            f" beta={record.beta:g}: {record.status}, {record.iterations} iterations",
            level="INFO",
        )
    if out is not None:
        write_run_records(records, out)
    return records


def write_run_records(records: Sequence[RunRecord], path: str):
    """CSV with the versioned schema comment as first line."""
    columns = [item.name for item in fields(RunRecord)]
    frame = pd.DataFrame([asdict(record) for record in records], columns=columns)
    with open(path, "w", encoding="utf-8", newline="") as out:
        out.write(CSV_HEADER + "\n")
        frame.to_csv(out, index=False, float_format="%.12g")


def read_run_records(path: str) -> pd.DataFrame:
    """Inverse of write_run_records (as a DataFrame).

    Raises:
        InsufficientDataError: the file lacks the schema comment
    """
    with open(path, "r", encoding="utf-8") as source:
        first = source.readline().strip()
    if first != CSV_HEADER:
        raise InsufficientDataError(f"{path} is not a run record file (header {first!r})")
    return pd.read_csv(path, skiprows=1)


@dataclass
class ComplexityFit:
    """log(iterations) = slope * log(1 / rho) + intercept

    reference is the slope the analysis predicts, 1 up to a log factor.
    """

    slope: float
    intercept: float
    points: int
    reference: float = 1.0


def complexity_fit(records: Union[Sequence[RunRecord], pd.DataFrame]) -> ComplexityFit:
    """Least-squares slope of log(iterations) against log(1 / rho) for one instance.

    Converged records are averaged per rho.

    Raises:
        InsufficientDataError: fewer than 4 distinct rho or a span under 3 decades
    """
    frame = records if isinstance(records, pd.DataFrame) else pd.DataFrame(
        [asdict(record) for record in records], columns=[item.name for item in fields(RunRecord)]
    )
    frame = frame[frame["status"] == "converged"]
    by_rho = frame.groupby("rho")["iterations"].mean()
    if len(by_rho) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"complexity fit needs {MIN_FIT_POINTS} distinct rho values, got {len(by_rho)}"
        )
    log_rho = np.log10(by_rho.index.to_numpy(dtype=float))
    if log_rho.max() - log_rho.min() < MIN_FIT_DECADES:
        raise InsufficientDataError(
            f"rho values span {log_rho.max() - log_rho.min():.2f} decades, need {MIN_FIT_DECADES}"
        )
    slope, intercept = np.polyfit(-log_rho * np.log(10.0), np.log(by_rho.to_numpy(float)), 1)
    return ComplexityFit(float(slope), float(intercept), len(by_rho))


class SweepComponent(Component):
    """Run config.sweep, write the CSV and log the complexity fit per parameter set."""

    def __init__(self, controller):
        super().__init__(controller)
        self.records: List[RunRecord] = []

    def validate_inputs(self):
        spec = self.config.sweep
        for rho, theta, alpha, beta in product(spec.rho, spec.theta, spec.alpha, spec.beta):
            validate_parameters(beta, theta, alpha, rho)

    @LogStartEnd("sweep", level="STATUS")
    def run(self):
        spec = self.config.sweep
        out = self.get_output_path(spec.out)
        self.records = run_sweep(spec, self.logger, out=out)
        self.logger.log_time(f"wrote {len(self.records)} run records to {out}", level="STATUS")
        frame = pd.DataFrame([asdict(record) for record in self.records])
        if frame.empty:
            return
        for (instance, theta, alpha, beta), group in frame.groupby(
            ["instance", "theta", "alpha", "beta"]
        ):
            try:
                fit = complexity_fit(group)
            except InsufficientDataError as error:
                self.logger.log_time(f"{instance}: no complexity fit, {error}", level="DEBUG")
                continue
            self.logger.log_time(
                f"{instance} theta={theta:g} alpha={alpha:g} beta={beta:g}: iteration slope"
                f" {fit.slope:.3f} over {fit.points} rho values (reference {fit.reference:g}"
                " up to a log factor)",
                level="STATUS",
            )
