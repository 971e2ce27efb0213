from __future__ import annotations

import csv
import json
import math
import os
from typing import List

import pytest
from _pytest.monkeypatch import MonkeyPatch

import optoarray.run
from optoarray.config import Config
from optoarray.dynamics import ConvergenceReport
from optoarray.experiment import TransferExperiment
from optoarray.run import (
    check_report,
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    point_config,
    run,
    sweep_points,
    SWEEP_FIELDS,
)
from tests.conftest import ASSETS


def _read_csv(path: str) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as file_:
        return list(csv.DictReader(file_))


def test_check_report(small_config: Config) -> None:
    report = check_report(small_config)
    assert report["ok"]
    assert report["stability"]["cells"] == [True] * 4
    assert report["rwa"]["ratio"] == pytest.approx(25.0)
    assert report["time_compatibility"]["ok"]
    assert report["coherent_threshold"]["max_hop"] == pytest.approx(2.0)


def test_check_command(small_config: Config) -> None:
    assert run(small_config, "check") == EXIT_OK
    with open(os.path.join(small_config.out_dir, "check.json")) as file_:
        document = json.load(file_)
    assert document["command"] == "check"
    assert document["report"]["ok"] is True
    assert document["config"]["array"]["cells"] == 4


@pytest.mark.parametrize("coupling", [60.0, 100.0])
def test_check_command_fails(small_config: Config, coupling: float) -> None:
    config = small_config.replace(G=coupling)
    assert run(config, "check") == EXIT_CHECK_FAILED
    assert not check_report(config)["ok"]


def test_check_coherent_threshold(small_config: Config) -> None:
    config = small_config.replace(kappa=5.0, open_system=True)
    report = check_report(config)
    assert not report["coherent_threshold"]["ok"]
    assert not report["ok"]


def test_config_error_exit(small_config: Config) -> None:
    config = small_config.replace(scheme="eigenmode", lambda_=0.05)
    assert run(config, "check") == EXIT_CONFIG_ERROR


def test_check_report_detuned_end_cells(small_config: Config) -> None:
    config = small_config.replace(cells=5, scheme="tunneling", lambda_=0.01, delta=0.1)
    report = check_report(config)
    bounds = report["stability"]["bound"]
    assert len(bounds) == 5
    assert bounds[1] == bounds[2] == bounds[3] == pytest.approx(50.0)
    assert bounds[0] == bounds[4] == pytest.approx(50.05)
    assert report["stability"]["cells"] == [True] * 5


def test_empty_sweep_grid(small_config: Config) -> None:
    assert run(small_config, "sweep") == EXIT_CONFIG_ERROR


def test_sweep_points_order(small_config: Config) -> None:
    config = small_config.replace(
        sweep_grid=[10.0, 25.0], sweep_states=["phi_plus", "Phi_plus"], bath_occupations=[0, 1]
    )
    points = list(sweep_points(config))
    assert points[:3] == [("phi_plus", 0, 10.0), ("phi_plus", 0, 25.0), ("phi_plus", 1, 10.0)]
    assert len(points) == 8


@pytest.mark.parametrize("axis, key", [("G_over_J", "G"), ("kappa_over_J", "kappa")])
def test_point_config(small_config: Config, axis: str, key: str) -> None:
    config = small_config.replace(sweep_axis=axis, J=2.0)
    point = point_config(config, 5.0, (1, 0), 0.5)
    assert getattr(point, key) == 10.0
    assert point.initial_state == (1, 0)
    assert point.n_m == 0.5
    assert config.initial_state == "phi_plus"


def test_sweep_command(small_config: Config) -> None:
    config = small_config.replace(sweep_grid=[1.0, 25.0, 60.0], threads=1)
    assert run(config, "sweep") == EXIT_OK
    rows = _read_csv(os.path.join(config.out_dir, "sweep.csv"))
    assert list(rows[0].keys()) == SWEEP_FIELDS
    assert [float(row["value"]) for row in rows] == [1.0, 25.0, 60.0]
    assert float(rows[1]["corrected_fidelity"]) >= 0.99
    assert float(rows[1]["corrected_fidelity"]) > float(rows[0]["corrected_fidelity"])
    # past the stability bound, but the beam-splitter modes are still positive
    assert rows[2]["error"] == ""
    with open(os.path.join(config.out_dir, "sweep.json")) as file_:
        metadata = json.load(file_)
    assert metadata["points"] == 3
    assert metadata["failed_points"] == 0


def test_sweep_records_failures(small_config: Config) -> None:
    config = small_config.replace(sweep_grid=[25.0, 150.0])
    assert run(config, "sweep") == EXIT_OK
    rows = _read_csv(os.path.join(config.out_dir, "sweep.csv"))
    assert rows[0]["error"] == ""
    assert rows[1]["error"].startswith("InstabilityError")
    assert rows[1]["corrected_fidelity"] == ""


def test_sweep_checks_convergence(small_config: Config) -> None:
    config = small_config.replace(sweep_grid=[1.0, 25.0], convergence_caps=[1, 2], threads=1)
    assert run(config, "sweep") == EXIT_OK
    with open(os.path.join(config.out_dir, "sweep.json")) as file_:
        metadata = json.load(file_)
    [record] = metadata["convergence"]
    assert record["value"] == 25.0
    assert record["state"] == "phi_plus"
    assert record["converged"]
    assert record["caps"] == [1, 2]
    assert len(record["values"]) == len(record["deltas"]) + 1


def test_sweep_not_converged(small_config: Config, monkeypatch: MonkeyPatch) -> None:
    def _check_convergence(self: TransferExperiment) -> ConvergenceReport:
        self.convergence = ConvergenceReport(caps=[1, 2], values=[0.5, 0.9], tol=1e-4, deltas=[0.4])
        return self.convergence

    monkeypatch.setattr(TransferExperiment, "check_convergence", _check_convergence)
    config = small_config.replace(sweep_grid=[1.0, 25.0], convergence_caps=[1, 2], threads=1)
    assert run(config, "sweep") == EXIT_NOT_CONVERGED
    rows = _read_csv(os.path.join(config.out_dir, "sweep.csv"))
    assert len(rows) == 2
    with open(os.path.join(config.out_dir, "sweep.json")) as file_:
        metadata = json.load(file_)
    assert [record["converged"] for record in metadata["convergence"]] == [False]


def test_sweep_without_convergence_caps(small_config: Config) -> None:
    config = small_config.replace(sweep_grid=[25.0], threads=1)
    assert run(config, "sweep") == EXIT_OK
    with open(os.path.join(config.out_dir, "sweep.json")) as file_:
        metadata = json.load(file_)
    assert metadata["convergence"] == []


def test_coupling_sweep_improves_both_states(small_config: Config) -> None:
    grid = [1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0]
    config = small_config.replace(
        sweep_grid=grid,
        sweep_states=["phi_plus", "Phi_plus"],
        mode_dim=3,
        excitation_cap=2,
        threads=1,
    )
    assert run(config, "sweep") == EXIT_OK
    rows = _read_csv(os.path.join(config.out_dir, "sweep.csv"))
    assert all(row["error"] == "" for row in rows)
    curves = {
        state: [float(row["corrected_fidelity"]) for row in rows if row["state"] == state]
        for state in ("phi_plus", "Phi_plus")
    }
    for curve in curves.values():
        assert len(curve) == len(grid)
        assert curve[-1] > curve[0]
    assert curves["phi_plus"][-1] >= 0.99
    assert curves["Phi_plus"][-1] >= 0.95


def test_simulate_command(small_config: Config) -> None:
    config = small_config.replace(gnuplot_script=True)
    assert run(config, "simulate") == EXIT_OK
    rows = _read_csv(os.path.join(config.out_dir, "simulate.csv"))
    assert len(rows) == 3
    assert float(rows[-1]["corrected_fidelity"]) >= 0.99
    assert os.path.exists(os.path.join(config.out_dir, "simulate.gp"))
    with open(os.path.join(config.out_dir, "simulate.json")) as file_:
        metadata = json.load(file_)
    assert metadata["plan"]["scheme"] == "pst"
    assert metadata["state"] == "phi_plus"


def test_simulate_not_converged(small_config: Config, monkeypatch: MonkeyPatch) -> None:
    def _check_convergence(self: TransferExperiment) -> ConvergenceReport:
        self.convergence = ConvergenceReport(caps=[1, 2], values=[0.5, 0.9], tol=1e-4)
        return self.convergence

    monkeypatch.setattr(TransferExperiment, "check_convergence", _check_convergence)
    assert run(small_config, "simulate") == EXIT_NOT_CONVERGED


def test_bidirectional_command(small_config: Config) -> None:
    config = small_config.replace(mode_dim=3, excitation_cap=2)
    assert run(config, "bidirectional") == EXIT_OK
    with open(os.path.join(config.out_dir, "bidirectional.json")) as file_:
        metadata = json.load(file_)
    assert metadata["interpretation"] == optoarray.run.BIDIRECTIONAL_INTERPRETATION


@pytest.mark.slow
def test_kappa_sweep_with_thermal_baths(tmp_path: str) -> None:
    config = Config.from_toml(os.path.join(ASSETS, "kappa_sweep.toml"))
    config = config.replace(out_dir=str(tmp_path), threads=0)
    status = run(config, "sweep")
    with open(os.path.join(str(tmp_path), "sweep.json")) as file_:
        metadata = json.load(file_)
    [record] = metadata["convergence"]
    assert (record["value"], record["n_m"]) == (1.0, 100.0)
    assert status == (EXIT_OK if record["converged"] else EXIT_NOT_CONVERGED)
    rows = _read_csv(os.path.join(str(tmp_path), "sweep.csv"))
    assert all(row["error"] == "" for row in rows)
    cold = [float(row["corrected_fidelity"]) for row in rows if float(row["n_m"]) == 1.0]
    hot = [float(row["corrected_fidelity"]) for row in rows if float(row["n_m"]) == 100.0]
    assert len(cold) == len(hot) == 4
    for curve in (cold, hot):
        assert all(later <= earlier + 1e-3 for earlier, later in zip(curve, curve[1:]))
    assert all(h <= c + 1e-3 for c, h in zip(cold, hot))
    # half of phi_plus sits in the cavity, so the fidelity at kappa / J = 0.1 is
    # bounded by exp(-kappa tau / 2) with tau = pi / J
    assert cold[2] == pytest.approx(0.843, abs=5e-3)
    assert cold[2] <= math.exp(-0.05 * math.pi) + 1e-3
    assert cold[0] >= 0.95
