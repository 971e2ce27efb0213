from __future__ import annotations

import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Sequence, Tuple

from .config import Config, ConfigError
from .dynamics import ConvergenceError
from .experiment import BIDIRECTIONAL_INTERPRETATION, state_label, TransferExperiment
from .fock import TruncationError
from .model import CellParams, DimensionLimitError, ParameterError, StateSpecError
from .polariton import check_rwa, check_stability, InstabilityError, stability_bound
from .protocols import ProtocolError
from .results import build_metadata, write_json, write_results
from .typing import CheckReport, StabilityReport, SweepRow, ThresholdReport, TwoModeSpec
from .utils import OptoArrayError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NOT_CONVERGED = 3

SWEEP_FIELDS = [
    "axis",
    "value",
    "state",
    "n_m",
    "tau",
    "raw_fidelity",
    "corrected_fidelity",
    "max_phase_fidelity",
    "trace",
    "error",
]

BIDIRECTIONAL_FIELDS = [
    "time_s",
    "receiver_raw_fidelity",
    "receiver_corrected_fidelity",
    "sender_raw_fidelity",
    "sender_corrected_fidelity",
    "trace",
]

# Precondition failures that a corrected configuration would avoid.
CONFIG_ERRORS = (
    ConfigError,
    ConvergenceError,
    DimensionLimitError,
    ParameterError,
    ProtocolError,
    StateSpecError,
    TruncationError,
)


def stability_report(cells: Sequence[CellParams]) -> StabilityReport:
    verdicts = [check_stability(cell) for cell in cells]
    return {
        "ok": all(verdicts),
        "cells": verdicts,
        "bound": [stability_bound(cell) for cell in cells],
    }


def check_report(config: Config) -> CheckReport:
    report: CheckReport = {
        "ok": False,
        "stability": stability_report([config.cell_params()] * config.cells),
        "rwa": None,
        "time_compatibility": None,
        "coherent_threshold": None,
        "warnings": [],
    }
    try:
        experiment = TransferExperiment(config)
        # detuned end cells carry their own bound
        stability = stability_report(experiment.array.cells)
        report["stability"] = stability
        space = config.create_space()
        rwa = check_rwa(experiment.array, experiment.initial_state(space), config.rwa_margin)
    except InstabilityError as error:
        report["warnings"].append(str(error))
        return report

    plan = experiment.plan
    max_decay = max(max(cell.kappa, cell.gamma) for cell in experiment.array.cells)
    threshold: ThresholdReport = {
        "ok": plan.peak_hop > max_decay,
        "max_hop": plan.peak_hop,
        "max_decay": max_decay,
    }
    report["rwa"] = rwa
    report["time_compatibility"] = {"ok": plan.compatible, "ratio": plan.compatibility_ratio}
    report["coherent_threshold"] = threshold
    report["warnings"].extend(plan.warnings)
    report["ok"] = stability["ok"] and rwa["ok"] and plan.compatible and threshold["ok"]
    return report


def cmd_check(config: Config) -> int:
    report = check_report(config)
    stability = report["stability"]
    config.log.info(
        "stability %s: G %.6g against bound %.6g",
        "pass" if stability["ok"] else "FAIL",
        config.G,
        min(stability["bound"]),
    )
    if report["rwa"] is not None:
        rwa = report["rwa"]
        config.log.info(
            "rwa %s: gap %.6g, hopping %.6g, ratio %.6g against margin %.6g",
            "pass" if rwa["ok"] else "FAIL",
            rwa["lhs"],
            rwa["rhs"],
            rwa["ratio"],
            rwa["margin"],
        )
    if report["time_compatibility"] is not None:
        compatibility = report["time_compatibility"]
        config.log.info(
            "time compatibility %s: tau ratio %.6g",
            "pass" if compatibility["ok"] else "FAIL",
            compatibility["ratio"],
        )
    if report["coherent_threshold"] is not None:
        threshold = report["coherent_threshold"]
        config.log.info(
            "coherent threshold %s: peak hop %.6g against decay %.6g",
            "pass" if threshold["ok"] else "FAIL",
            threshold["max_hop"],
            threshold["max_decay"],
        )
    for warning in report["warnings"]:
        config.log.warning(warning)

    os.makedirs(config.out_dir, exist_ok=True)
    write_json(
        Path(config.out_dir) / "check.json",
        build_metadata("check", config.to_mapping(), 0.0, report=report),
    )
    return EXIT_OK if report["ok"] else EXIT_CHECK_FAILED


def cmd_simulate(config: Config) -> int:
    start = time.perf_counter()
    experiment = TransferExperiment(config)
    convergence = experiment.check_convergence()
    rows = experiment.run()
    wall_time = time.perf_counter() - start

    metadata = build_metadata(
        "simulate",
        config.to_mapping(),
        wall_time,
        state=state_label(config.initial_state),
        **experiment.metadata(),
    )
    files = write_results(
        config.out_dir,
        "simulate",
        rows,
        metadata,
        gnuplot=(
            ["time_s", "raw_fidelity", "corrected_fidelity", "max_phase_fidelity"]
            if config.gnuplot_script
            else None
        ),
    )
    final = rows[-1]
    config.log.info(
        "Corrected fidelity %.6g at t=%.6g, written to %s",
        final["corrected_fidelity"],
        final["time_s"],
        files.csv,
    )
    if convergence is not None and not convergence.converged:
        config.log.error("Truncation did not converge within caps %s", convergence.caps)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def sweep_points(config: Config) -> Iterator[Tuple[TwoModeSpec, float, float]]:
    if not config.sweep_grid:
        raise ConfigError("The sweep grid is empty", "sweep")
    bath = config.bath_occupations or [config.n_m]
    return itertools.product(config.sweep_states, bath, config.sweep_grid)


def point_config(config: Config, value: float, state: TwoModeSpec, n_m: float) -> Config:
    changes: Dict[str, Any] = {"initial_state": state, "n_m": n_m}
    if config.sweep_axis == "G_over_J":
        changes["G"] = value * config.J
    elif config.sweep_axis == "kappa_over_J":
        changes["kappa"] = value * config.J
    else:
        raise ConfigError(f"Unknown sweep axis {config.sweep_axis!r}", "sweep")
    return config.replace(**changes)


def converge_at(config: Config, value: float, n_m: float) -> bool:
    """Truncation is checked at the hottest bath and the last grid value of each state."""
    if not config.convergence_caps:
        return False
    bath = config.bath_occupations or [config.n_m]
    return n_m == max(bath) and value == config.sweep_grid[-1]


def sweep_point(
    config: Config, value: float, state: TwoModeSpec, n_m: float, converge: bool = False
) -> SweepRow:
    row: SweepRow = {
        "axis": config.sweep_axis,
        "value": value,
        "state": state_label(state),
        "n_m": n_m,
        "error": None,
        "convergence": None,
    }
    start = time.perf_counter()
    try:
        experiment = TransferExperiment(point_config(config, value, state, n_m))
        if converge:
            report = experiment.check_convergence()
            row["convergence"] = None if report is None else report.as_record()
        measured = experiment.measure_at_tau()
    except Exception as error:
        row["error"] = f"{type(error).__name__}: {error}"
    else:
        row.update(measured)  # type: ignore
    row["wall_time"] = time.perf_counter() - start
    return row


def _star_sweep_point(args: Tuple[Config, float, TwoModeSpec, float, bool]) -> SweepRow:
    return sweep_point(*args)


def _workers(config: Config) -> int:
    if config.threads == 0:
        return os.cpu_count() or 1
    return config.threads


def _map(config: Config, function: Callable, items: List[Any]) -> Iterator[Any]:
    workers = _workers(config)
    if workers == 1 or len(items) == 1:
        yield from map(function, items)
    else:
        # Each worker owns its evolutions; map keeps the submission order.
        ctx = get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as executor:
            yield from executor.map(function, items)


def cmd_sweep(config: Config) -> int:
    start = time.perf_counter()
    worker_config = config.replace()
    points = [
        (worker_config, value, state, n_m, converge_at(config, value, n_m))
        for state, n_m, value in sweep_points(config)
    ]

    rows: List[SweepRow] = []
    for row in _map(config, _star_sweep_point, points):
        config.log.progress(row)
        rows.append(row)
    wall_time = time.perf_counter() - start

    failures = sum(1 for row in rows if row.get("error") is not None)
    if failures:
        config.log.warning("%d of %d sweep points failed", failures, len(rows))
    convergence = [
        {"value": row["value"], "state": row["state"], "n_m": row["n_m"], **row["convergence"]}
        for row in rows
        if row.get("convergence") is not None
    ]
    metadata = build_metadata(
        "sweep",
        config.to_mapping(),
        wall_time,
        points=len(rows),
        failed_points=failures,
        workers=_workers(config),
        convergence=convergence,
    )
    files = write_results(
        config.out_dir,
        "sweep",
        rows,
        metadata,
        fieldnames=SWEEP_FIELDS,
        gnuplot=(
            ["value", "corrected_fidelity", "raw_fidelity", "max_phase_fidelity"]
            if config.gnuplot_script
            else None
        ),
    )
    config.log.info("%d sweep points written to %s", len(rows), files.csv)
    unconverged = [record for record in convergence if not record["converged"]]
    if unconverged:
        for record in unconverged:
            config.log.error(
                "Truncation did not converge within caps %s at %s=%g, state %s, n_m %g",
                record["caps"],
                config.sweep_axis,
                record["value"],
                record["state"],
                record["n_m"],
            )
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_bidirectional(config: Config) -> int:
    start = time.perf_counter()
    experiment = TransferExperiment(config)
    rows = experiment.run_bidirectional()
    wall_time = time.perf_counter() - start

    metadata = build_metadata(
        "bidirectional",
        config.to_mapping(),
        wall_time,
        interpretation=BIDIRECTIONAL_INTERPRETATION,
        states={
            "sender": state_label(config.initial_state),
            "receiver": state_label(config.partner_state),
        },
        **experiment.metadata(),
    )
    files = write_results(
        config.out_dir,
        "bidirectional",
        rows,
        metadata,
        fieldnames=BIDIRECTIONAL_FIELDS,
        gnuplot=(
            ["time_s", "receiver_corrected_fidelity", "sender_corrected_fidelity"]
            if config.gnuplot_script
            else None
        ),
    )
    final = rows[-1]
    config.log.info(
        "Corrected fidelities at t=%.6g, receiver %.6g, sender %.6g (%s), written to %s",
        final["time_s"],
        final["receiver_corrected_fidelity"],
        final["sender_corrected_fidelity"],
        BIDIRECTIONAL_INTERPRETATION,
        files.csv,
    )
    return EXIT_OK


COMMANDS: Dict[str, Callable[[Config], int]] = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "bidirectional": cmd_bidirectional,
}


def run(config: Config, command: str) -> int:
    try:
        return COMMANDS[command](config)
    except CONFIG_ERRORS as error:
        config.log.error("Configuration error: %s", error)
        return EXIT_CONFIG_ERROR
    except InstabilityError as error:
        config.log.error("Physics check failed: %s", error)
        return EXIT_CHECK_FAILED
    except OptoArrayError as error:
        config.log.error("%s", error)
        return EXIT_CHECK_FAILED
