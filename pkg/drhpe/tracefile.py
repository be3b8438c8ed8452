"""JSON lines iterate trace files.

Layout: one header record (instance, run parameters, R, S, z0), one record per
iteration (full IterateRecord plus its step norm), and a final certificate
record when the run converged. `drhpe certify` re-checks a run from this file
alone.
"""

import json
from dataclasses import dataclass
from typing import Optional

from drhpe.dradmm import (
    Certificate,
    DrAdmmConfig,
    IterateRecord,
    IterateTrace,
    build_metric,
)
from drhpe.errors import InstanceFormatError
from drhpe.objectives import SeparableProblem, problem_from_dict, problem_to_dict
from drhpe.operators import BlockPoint, PsdOperator, QMetric

TRACE_VERSION = 1


class TraceWriter:
    """Append-only trace writer, usable as a context manager.

    Args:
        path: output file, truncated on open
        problem: the instance being solved
        cfg: run parameters
    """

    def __init__(self, path: str, problem: SeparableProblem, cfg: DrAdmmConfig):
        self.path = path
        self._metric = build_metric(problem, cfg)
        R, S, z0 = cfg.blocks(problem)
        self._file = open(path, "w", encoding="utf-8")
        try:
            self._write_header(problem, cfg, R, S, z0)
        except Exception:
            self._file.close()
            raise

    def _write_header(self, problem, cfg, R, S, z0):
        self._write(
            {
                "type": "header",
                "version": TRACE_VERSION,
                "problem": problem_to_dict(problem),
                "params": {
                    "beta": cfg.beta,
                    "theta": cfg.theta,
                    "alpha": cfg.alpha,
                    "rho": cfg.rho,
                    "warm_start": cfg.warm_start,
                    "max_cycles": cfg.max_cycles,
                    "max_inner_iters": cfg.max_inner_iters,
                },
                "R": R.to_dict(),
                "S": S.to_dict(),
                "z0": z0.to_dict(),
            }
        )

    def _write(self, record: dict):
        self._file.write(json.dumps(record) + "\n")

    def write_record(self, record: IterateRecord):
        line = record.to_dict()
        line["type"] = "iterate"
        line["step_norm"] = self._metric.norm(record.delta)
        self._write(line)

    def write_certificate(self, certificate: Certificate):
        line = certificate.to_dict()
        line["type"] = "certificate"
        self._write(line)

    def close(self):
        if not self._file.closed:
            self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *args):
        self.close()


@dataclass
class TraceFile:
    """Contents of a trace file."""

    problem: SeparableProblem
    cfg: DrAdmmConfig
    metric: QMetric
    z0: BlockPoint
    trace: IterateTrace
    certificate: Optional[Certificate]


def read_trace(path: str) -> TraceFile:
    """Load a trace file written by TraceWriter.

    Raises:
        InstanceFormatError: unreadable file, missing header or unknown version
    """
    try:
        with open(path, "r", encoding="utf-8") as trace_file:
            lines = [json.loads(line) for line in trace_file if line.strip()]
    except (OSError, json.JSONDecodeError) as error:
        raise InstanceFormatError(f"cannot read trace {path}: {error}") from error
    if not lines or lines[0].get("type") != "header":
        raise InstanceFormatError(f"trace {path} has no header record")
    header = lines[0]
    if header.get("version") != TRACE_VERSION:
        raise InstanceFormatError(f"trace {path} has unsupported version {header.get('version')}")
    try:
        problem = problem_from_dict(header["problem"])
        params = header["params"]
        cfg = DrAdmmConfig(
            R=PsdOperator.from_dict(header["R"]),
            S=PsdOperator.from_dict(header["S"]),
            z0=BlockPoint.from_dict(header["z0"]),
            trace_enabled=True,
            **params,
        )
    except (KeyError, TypeError, ValueError) as error:
        raise InstanceFormatError(f"trace {path} has an invalid header: {error}") from error
    trace = IterateTrace()
    certificate = None
    for line in lines[1:]:
        kind = line.pop("type", None)
        if kind == "iterate":
            line.pop("step_norm", None)
            trace.append(IterateRecord.from_dict(line))
        elif kind == "certificate":
            certificate = Certificate.from_dict(line)
    _, _, z0 = cfg.blocks(problem)
    return TraceFile(problem, cfg, build_metric(problem, cfg), z0, trace, certificate)
