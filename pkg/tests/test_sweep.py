import os

import pandas as pd
import pytest

from drhpe.components.region import REGION_COLUMNS, feasibility_region
from drhpe.components.sweep import (
    CSV_HEADER,
    RunRecord,
    SweepSpec,
    complexity_fit,
    read_run_records,
    run_sweep,
    write_run_records,
)
from drhpe.config import InstanceConfig
from drhpe.errors import InsufficientDataError, StepsizeOutOfDomainError


def _synthetic(rhos, iterations, status="converged"):
    return [
        RunRecord("synthetic", 0, 1.6, 10.0, 1.0, rho, status, count, 1, 0.0, rho / 2)
        for rho, count in zip(rhos, iterations)
    ]


def test_empty_sweep_writes_header(tmp_path):
    """No parameter combinations: a CSV with the schema line and column names only."""
    out = os.path.join(tmp_path, "empty.csv")
    spec = SweepSpec(instance=InstanceConfig(family="trivial"), rho=())
    assert run_sweep(spec, out=out) == []
    with open(out, encoding="utf-8") as csv_file:
        assert csv_file.readline().strip() == CSV_HEADER
    assert read_run_records(out).empty


def test_trivial_sweep(tmp_path):
    """One combination on the trivial instance: one converged, certified row."""
    out = os.path.join(tmp_path, "trivial.csv")
    spec = SweepSpec(instance=InstanceConfig(family="trivial", n=2), rho=(1e-3,))
    records = run_sweep(spec, out=out)
    assert len(records) == 1
    record = records[0]
    assert record.status == "converged"
    assert record.iterations == 1
    assert record.cycles == 1
    assert record.certified is True
    assert record.instance == "trivial-n2"
    frame = read_run_records(out)
    assert list(frame["iterations"]) == [1]


def test_sweep_rejects_invalid_parameters():
    """A stepsize outside the domain fails before any run."""
    spec = SweepSpec(
        instance=InstanceConfig(family="trivial"), rho=(1e-3,), theta=(1.7,), alpha=(0.0,)
    )
    with pytest.raises(StepsizeOutOfDomainError):
        run_sweep(spec)


def test_nonconvergence_becomes_record():
    """Hitting the iteration limit yields a nonconvergence row, not an exception."""
    spec = SweepSpec(
        instance=InstanceConfig(family="eq_qp", n=5, p=4, m=3),
        rho=(1e-10,),
        max_inner_iters=2,
        certify=False,
    )
    (record,) = run_sweep(spec)
    assert record.status == "nonconvergence"
    assert record.certified is None
    assert record.message


def test_nonconvergence_counts_iterations_without_trace():
    """The iteration count of a failed run is reported even when no trace is kept."""
    spec = SweepSpec(
        instance=InstanceConfig(family="lasso", n=20, m=10),
        rho=(1e-8,),
        max_inner_iters=50,
        certify=False,
    )
    (record,) = run_sweep(spec)
    assert record.status == "nonconvergence"
    assert record.iterations == 50


def test_sweep_is_deterministic():
    """Repeated sweeps agree in every column except wall_time."""
    spec = SweepSpec(
        instance=InstanceConfig(family="eq_qp", n=6, p=5, m=4),
        rho=(1e-2, 1e-3),
        theta=(0.8, 1.6),
        repetitions=2,
    )
    first = pd.DataFrame([vars(r) for r in run_sweep(spec)]).drop(columns="wall_time")
    second = pd.DataFrame([vars(r) for r in run_sweep(spec)]).drop(columns="wall_time")
    pd.testing.assert_frame_equal(first, second)
    assert set(first["instance"]) == {"eq_qp-n6-p5-m4-s0", "eq_qp-n6-p5-m4-s1"}
    assert first["certified"].all()


@pytest.mark.skipci
def test_sweep_workers_match_serial():
    """A process pool produces the rows of the serial sweep in the same order."""
    spec = SweepSpec(
        instance=InstanceConfig(family="lasso", n=15, m=10),
        rho=(1e-1, 1e-2, 1e-3, 1e-4),
        theta=(0.5, 1.6),
        alpha=(0.0,),
    )
    serial = pd.DataFrame([vars(r) for r in run_sweep(spec, workers=1)])
    pooled = pd.DataFrame([vars(r) for r in run_sweep(spec, workers=2)])
    pd.testing.assert_frame_equal(
        serial.drop(columns="wall_time"), pooled.drop(columns="wall_time")
    )


def test_run_records_roundtrip(tmp_path):
    """Records written to CSV read back with the same values."""
    out = os.path.join(tmp_path, "records.csv")
    records = _synthetic([1e-1, 1e-2], [10, 100])
    write_run_records(records, out)
    frame = read_run_records(out)
    assert list(frame["rho"]) == [1e-1, 1e-2]
    assert list(frame["iterations"]) == [10, 100]
    assert list(frame["status"]) == ["converged", "converged"]


def test_read_rejects_foreign_csv(tmp_path):
    """A CSV without the schema line is not a run record file."""
    out = os.path.join(tmp_path, "other.csv")
    pd.DataFrame({"rho": [0.1]}).to_csv(out, index=False)
    with pytest.raises(InsufficientDataError):
        read_run_records(out)


def test_complexity_fit_slopes():
    """iterations ~ 1 / rho fits slope 1; constant iterations fit slope 0."""
    rhos = [1e-1, 1e-2, 1e-3, 1e-4]
    fit = complexity_fit(_synthetic(rhos, [100, 1000, 10000, 100000]))
    assert fit.slope == pytest.approx(1.0)
    assert fit.points == 4
    assert fit.reference == 1.0
    assert complexity_fit(_synthetic(rhos, [50] * 4)).slope == pytest.approx(0.0, abs=1e-12)


def test_complexity_fit_ignores_failures():
    """Only converged rows enter the fit."""
    rhos = [1e-1, 1e-2, 1e-3, 1e-4]
    records = _synthetic(rhos, [10, 100, 1000, 10000])
    records += _synthetic([1e-5], [7], status="nonconvergence")
    fit = complexity_fit(pd.DataFrame([vars(r) for r in records]))
    assert fit.slope == pytest.approx(1.0)
    assert fit.points == 4


def test_complexity_fit_needs_data():
    """Too few rho values, or too narrow a span, is insufficient."""
    with pytest.raises(InsufficientDataError):
        complexity_fit(_synthetic([1e-1, 1e-2, 1e-3], [1, 2, 3]))
    with pytest.raises(InsufficientDataError):
        complexity_fit(_synthetic([1e-1, 5e-2, 2e-2, 1e-2], [1, 2, 3, 4]))


def test_feasibility_region():
    """theta < 1, theta = 1 and theta past the bound at alpha = 0."""
    frame = feasibility_region([0.0], [0.5, 1.0, 1.7])
    assert list(frame.columns) == REGION_COLUMNS
    short, unit, outside = frame.to_dict("records")
    assert short["regime"] == "theta_lt_1"
    assert (short["sigma"], short["tau"]) == (0.75, 0.5)
    assert unit["feasible"] and unit["tau"] == 511 / 1024
    assert unit["sigma"] == pytest.approx(0.5)
    assert not outside["in_domain"] and not outside["feasible"]


def test_lasso_iterations_grow_as_rho_shrinks():
    """Four tolerances give four rows; tighter rho never takes fewer iterations."""
    spec = SweepSpec(
        instance=InstanceConfig(family="lasso", n=20, m=10),
        rho=(1e-1, 1e-2, 1e-3, 1e-4),
        certify=False,
    )
    frame = pd.DataFrame([vars(r) for r in run_sweep(spec)])
    assert len(frame) == 4
    assert (frame["status"] == "converged").all()
    iterations = list(frame.sort_values("rho", ascending=False)["iterations"])
    assert iterations == sorted(iterations)


def test_eq_qp_complexity_slope():
    """Iterations on a strongly convex QP scale like 1 / rho up to a log factor."""
    spec = SweepSpec(
        instance=InstanceConfig(family="eq_qp", n=20, p=20, m=10),
        rho=(1e-1, 1e-2, 1e-3, 1e-4),
        certify=False,
    )
    fit = complexity_fit(run_sweep(spec))
    assert fit.points == 4
    assert 0.4 <= fit.slope <= 1.4
