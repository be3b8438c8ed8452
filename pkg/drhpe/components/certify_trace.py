"""Certification of a recorded iterate trace."""

import json
import os
from typing import Optional

from drhpe.certify import CertificationReport, certify_run
from drhpe.components.component import Component
from drhpe.errors import CertificationError, ConfigError
from drhpe.logger import LogStartEnd
from drhpe.tracefile import read_trace


class CertifyComponent(Component):
    """Re-check every inequality of the method on a trace file written by a solve.

    Writes the text report to config.certify.report and the key-value form to
    the same path with a .json suffix.

    Raises (from run):
        CertificationError: a check failed; the reports are written first
    """

    def __init__(self, controller):
        super().__init__(controller)
        self.report: Optional[CertificationReport] = None

    def validate_inputs(self):
        if self.config.certify is None:
            raise ConfigError("certify component needs a [certify] section")

    @LogStartEnd("certify", level="STATUS")
    def run(self):
        settings = self.config.certify
        trace_file = read_trace(self.get_abs_path(settings.trace))
        if trace_file.certificate is None:
            self.logger.log_time("trace has no certificate record, run did not converge", "WARN")
        self.report = certify_run(
            trace_file.problem,
            trace_file.metric,
            trace_file.z0,
            trace_file.trace,
            certificate=trace_file.certificate,
            d0_bound=settings.d0,
            rho=trace_file.cfg.rho,
            tol=settings.tolerance,
            logger=self.logger,
        )
        report_path = self.get_output_path(settings.report)
        with open(report_path, "w", encoding="utf-8") as out:
            out.write(self.report.to_text())
        with open(os.path.splitext(report_path)[0] + ".json", "w", encoding="utf-8") as out:
            json.dump(self.report.to_dict(), out, indent=2)
        if not self.report.passed:
            failed = [check.name for check in self.report.checks if not check.passed]
            raise CertificationError(f"certification failed: {', '.join(failed)}")
