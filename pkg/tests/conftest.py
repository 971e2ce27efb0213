from __future__ import annotations

import os

import pytest
from _pytest.monkeypatch import MonkeyPatch

import optoarray.polariton
from optoarray.config import Config
from optoarray.model import CellParams

ASSETS = os.path.join(os.path.dirname(__file__), "assets")


@pytest.fixture(autouse=True)
def _corrections(monkeypatch: MonkeyPatch) -> None:
    monkeypatch.setattr(optoarray.polariton, "_corrections_reported", False)


@pytest.fixture(name="red_params")
def _red_params() -> CellParams:
    return CellParams(omega_m=100.0, delta_p=-100.0, G=25.0)


@pytest.fixture(name="small_config")
def _small_config(tmp_path: str) -> Config:
    """Closed N=4 red-sideband PST at G/J=25, in units of J."""
    return Config.from_mapping(
        {
            "array": {"cells": 4, "omega_m": 100.0, "G": 25.0},
            "protocol": {"scheme": "pst", "J": 1.0},
            "truncation": {"mode_dim": 2, "excitation_cap": 1},
            "dynamics": {"samples": 3},
            "output": {"out_dir": str(tmp_path)},
            "logging": {"progresslog": None},
        }
    )
