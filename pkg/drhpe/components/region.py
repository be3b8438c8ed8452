"""Feasibility map of the analysis constants over an (alpha, theta) grid."""

from typing import Iterable, List

import pandas as pd

from drhpe.certify import REGIME_GE_1, REGIME_LT_1, proposition_params
from drhpe.components.component import Component
from drhpe.dradmm import stepsize_upper_bound
from drhpe.errors import RegimeError, TheoryViolationError
from drhpe.logger import LogStartEnd

REGION_COLUMNS = [
    "alpha",
    "theta",
    "stepsize_bound",
    "in_domain",
    "regime",
    "tau",
    "sigma",
    "feasible",
]


def feasibility_region(alpha_grid: Iterable[float], theta_grid: Iterable[float]) -> pd.DataFrame:
    """One row per (alpha, theta): stepsize bound, regime and the (tau, sigma) in use.

    Points outside the stepsize domain, or where no tau is found, get NaN
    constants and feasible = False.
    """
    rows: List[dict] = []
    theta_grid = list(theta_grid)
    for alpha in alpha_grid:
        bound = stepsize_upper_bound(alpha)
        for theta in theta_grid:
            row = {
                "alpha": float(alpha),
                "theta": float(theta),
                "stepsize_bound": bound,
                "in_domain": 0 < theta < bound,
                "regime": "",
                "tau": float("nan"),
                "sigma": float("nan"),
                "feasible": False,
            }
            if row["in_domain"]:
                row["regime"] = REGIME_LT_1 if theta < 1 else REGIME_GE_1
                try:
                    params = proposition_params(theta, alpha)
                except (RegimeError, TheoryViolationError):
                    pass
                else:
                    row.update(tau=params.tau, sigma=params.sigma, feasible=True)
            rows.append(row)
    return pd.DataFrame(rows, columns=REGION_COLUMNS)


class RegionComponent(Component):
    """Write the feasibility map for config.region to CSV."""

    @LogStartEnd("region", level="STATUS")
    def run(self):
        settings = self.config.region
        frame = feasibility_region(settings.alpha_grid, settings.theta_grid)
        out = self.get_output_path(settings.out)
        frame.to_csv(out, index=False, float_format="%.10g")
        inside = frame[frame["in_domain"]]
        self.logger.log_time(
            f"{len(frame)} grid points, {int(inside['feasible'].sum())} of {len(inside)} inside"
            f" the stepsize domain feasible; wrote {out}",
            level="STATUS",
        )
