import json
import os

import pandas as pd
import pytest

from drhpe.components.region import REGION_COLUMNS
from drhpe.config import Configuration, InstanceConfig, RunConfig, SolverConfig
from drhpe.controller import RunController, main
from drhpe.examples import get_example


@pytest.fixture
def lasso_file(tmp_path, monkeypatch):
    """Work in tmp_path with the lasso example instance written there."""
    monkeypatch.chdir(tmp_path)
    return get_example("lasso", root_dir=str(tmp_path))


def test_region_command(tmp_path):
    """region writes one row per grid point."""
    out = os.path.join(tmp_path, "region.csv")
    assert main(["region", "--alpha-grid", "0,10", "--theta-grid", "0.5:1.5:3", "--out", out]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == REGION_COLUMNS
    assert len(frame) == 6


def test_solve_then_certify(lasso_file, tmp_path):
    """A traced solve certifies; both commands exit 0."""
    argv = ["solve", "--instance", lasso_file, "--rho", "1e-4", "--trace", "trace.jsonl"]
    assert main(argv + ["--log-level", "WARN"]) == 0
    with open(os.path.join(tmp_path, "solve_summary.json"), encoding="utf-8") as summary:
        assert json.load(summary)["summary"]["residual"] <= 1e-4

    assert main(["certify", "--trace", "trace.jsonl", "--report", "report.txt"]) == 0
    with open(os.path.join(tmp_path, "report.txt"), encoding="utf-8") as report:
        assert report.readline().strip() == "certification: PASS"
    assert os.path.exists(os.path.join(tmp_path, "report.json"))


def test_nonconvergence_exit_code(lasso_file):
    """The iteration limit maps to exit code 2."""
    argv = ["solve", "--instance", lasso_file, "--rho", "1e-12", "--max-inner-iters", "2"]
    assert main(argv) == 2


def test_input_error_exit_codes(lasso_file, tmp_path):
    """Parameters outside the stepsize domain and missing files map to exit code 4."""
    assert main(["solve", "--instance", lasso_file, "--theta", "1.7", "--alpha", "0"]) == 4
    assert main(["solve", "--instance", "absent.json"]) == 4
    assert main(["certify", "--trace", "absent.jsonl", "--report", "report.txt"]) == 4


def test_controller_with_configuration(tmp_path):
    """RunController runs a ready Configuration and keeps the finished components."""
    config = Configuration(
        run=RunConfig(components=("solve",)),
        solver=SolverConfig(rho=1e-6),
        instance=InstanceConfig(family="trivial", n=3),
    )
    controller = RunController(config, run_dir=str(tmp_path))
    controller.run()
    [(name, component)] = controller.completed_components
    assert name == "solve"
    assert component is controller.get_component("solve")
    assert component.certificate.total_iters == 1
    assert component.summary["instance"] == "trivial-n3"
    assert os.path.exists(os.path.join(tmp_path, "solve_summary.json"))


def test_run_command_with_config_files(tmp_path):
    """run --config uses the first file's directory unless --run-dir is given."""
    config_file = os.path.join(tmp_path, "region.toml")
    with open(config_file, "w", encoding="utf-8") as toml_file:
        toml_file.write(
            '[run]\ncomponents = ["region"]\n'
            "[region]\nalpha_grid = [1.0]\ntheta_grid = [0.5, 1.0]\n"
        )
    assert main(["run", "--config", config_file]) == 0
    assert len(pd.read_csv(os.path.join(tmp_path, "region.csv"))) == 2
