from __future__ import annotations

import copy
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, AnyStr, Dict, List, Mapping, Optional, Tuple, Type, Union

import jsonschema

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .fock import HilbertSpace
from .logging import Logger
from .model import ArrayConfig, CellParams, make_array_space, ModelKind, ParameterError
from .polariton import chain_ratios
from .protocols import (
    DEFAULT_MARGIN,
    eigenmode_profile,
    pst_profile,
    TransferPlan,
    tunneling_profile,
)
from .typing import Scheme, SweepAxis, TwoModeSpec
from .utils import OptoArrayError

FilePath = Union[AnyStr, os.PathLike]

TWO_PI = 2.0 * math.pi
RAD_S_SUFFIX = "_rad_s"
HZ_SUFFIX = "_over_2pi_hz"
SCHEMA_PATH = Path(__file__).with_name("schema.json")

# section key -> attribute, where the two differ
_ALIASES = {
    ("protocol", "lambda"): "lambda_",
    ("sweep", "axis"): "sweep_axis",
    ("sweep", "grid"): "sweep_grid",
    ("sweep", "states"): "sweep_states",
}

_SECTIONS: Dict[str, Tuple[str, ...]] = {
    "array": (
        "cells",
        "model_kind",
        "omega_m",
        "delta_p",
        "G",
        "g",
        "alpha",
        "kappa",
        "gamma",
        "n_c",
        "n_m",
        "sender",
        "receiver",
    ),
    "protocol": ("scheme", "J", "lambda_", "delta", "chain_ratio", "margin"),
    "state": ("initial_state", "partner_state"),
    "truncation": ("mode_dim", "excitation_cap", "convergence_caps"),
    "sweep": ("sweep_axis", "sweep_grid", "sweep_states", "bath_occupations"),
    "dynamics": (
        "open_system",
        "method",
        "rel_tol",
        "abs_tol",
        "samples",
        "t_final",
        "max_dim_pure",
        "max_dim_density",
        "force_dim",
        "convergence_tol",
        "rwa_margin",
        "rotating_frame",
    ),
    "output": ("out_dir", "gnuplot_script", "threads"),
    "logging": (
        "loglevel",
        "errorlog",
        "progresslog",
        "progress_log_format",
        "logconfig",
        "logconfig_dict",
    ),
}


class ConfigError(OptoArrayError, ValueError):
    def __init__(self, message: str, source: Optional[str] = None) -> None:
        if source is not None:
            message = f"{source}: {message}"
        super().__init__(message)


def _state_spec(value: Any) -> TwoModeSpec:
    """Turn a file level state into the form the state builders accept."""
    if isinstance(value, str) or isinstance(value, Mapping):
        return value
    if isinstance(value, (tuple, list)) and len(value) == 2:
        if all(isinstance(entry, int) for entry in value):
            return (value[0], value[1])
    amplitudes: Dict[Tuple[int, int], complex] = {}
    for entry in value:
        n_a, n_b, real, imag = entry
        amplitudes[(int(n_a), int(n_b))] = complex(real, imag)
    return amplitudes


def _state_echo(value: TwoModeSpec) -> Any:
    if isinstance(value, str):
        return value
    if isinstance(value, Mapping):
        return [[n_a, n_b, amp.real, amp.imag] for (n_a, n_b), amp in value.items()]
    n_a, n_b = value
    return [[n_a, n_b, 1.0, 0.0]]


class Config:
    _delta_p: Optional[float] = None
    _initial_state: TwoModeSpec = "phi_plus"
    _partner_state: Optional[TwoModeSpec] = None
    _log: Optional[Logger] = None
    _sweep_states: List[TwoModeSpec] = ["phi_plus"]

    abs_tol = 1e-12
    alpha: Optional[float] = None
    bath_occupations: List[float] = []
    cells = 4
    chain_ratio: Optional[float] = None
    convergence_caps: List[int] = []
    convergence_tol = 1e-4
    delta: Optional[float] = None
    errorlog: Union[logging.Logger, str, None] = "-"
    excitation_cap: Optional[int] = 4
    force_dim = False
    G = 25.0
    g: Optional[float] = None
    gamma = 0.0
    gnuplot_script = False
    J = 1.0
    kappa = 0.0
    lambda_: Optional[float] = None
    logconfig: Optional[str] = None
    logconfig_dict: Optional[dict] = None
    logger_class = Logger
    loglevel: str = "INFO"
    margin = DEFAULT_MARGIN
    max_dim_density = 5000
    max_dim_pure = 20000
    method = "auto"
    mode_dim = 4
    model_kind = "red_sideband"
    n_c = 0.0
    n_m = 0.0
    omega_m = 100.0
    open_system = False
    out_dir = "results"
    progress_log_format = (
        "%(axis)s=%(v)s state=%(s)s n_m=%(n)s fidelity=%(F)s raw=%(f)s %(T)ss %(e)s"
    )
    progresslog: Union[logging.Logger, str, None] = "-"
    receiver: Optional[int] = None
    rel_tol: Optional[float] = None
    rotating_frame = True
    rwa_margin = 10.0
    samples = 101
    scheme: Scheme = "pst"
    sender = 0
    sweep_axis: SweepAxis = "G_over_J"
    sweep_grid: List[float] = []
    t_final: Optional[float] = None
    threads = 1

    @property
    def log(self) -> Logger:
        if self._log is None:
            self._log = self.logger_class(self)
        return self._log

    @property
    def delta_p(self) -> float:
        """Pump detuning, on the red sideband ``-omega_m`` unless set."""
        if self._delta_p is None:
            return -self.omega_m
        return self._delta_p

    @delta_p.setter
    def delta_p(self, value: Optional[float]) -> None:
        self._delta_p = value

    @property
    def initial_state(self) -> TwoModeSpec:
        return self._initial_state

    @initial_state.setter
    def initial_state(self, value: Any) -> None:
        self._initial_state = _state_spec(value)

    @property
    def partner_state(self) -> TwoModeSpec:
        if self._partner_state is None:
            return self._initial_state
        return self._partner_state

    @partner_state.setter
    def partner_state(self, value: Any) -> None:
        self._partner_state = None if value is None else _state_spec(value)

    @property
    def sweep_states(self) -> List[TwoModeSpec]:
        return self._sweep_states

    @sweep_states.setter
    def sweep_states(self, value: Any) -> None:
        self._sweep_states = [_state_spec(state) for state in value]

    @classmethod
    def settings(cls: Type["Config"]) -> List[str]:
        return [name for names in _SECTIONS.values() for name in names]

    def cell_params(self) -> CellParams:
        try:
            return CellParams(
                omega_m=self.omega_m,
                delta_p=self.delta_p,
                G=self.G,
                kappa=self.kappa,
                gamma=self.gamma,
                n_c=self.n_c,
                n_m=self.n_m,
                g=self.g,
                alpha=self.alpha,
            )
        except ParameterError as error:
            raise ConfigError(str(error), "array")

    def _uniform_array(self, hops: List[float]) -> ArrayConfig:
        try:
            return ArrayConfig(
                cells=tuple(self.cell_params() for _ in range(self.cells)),
                hops=tuple(hops),
                model_kind=ModelKind(self.model_kind),
                sender=self.sender,
                receiver=self.receiver,
            )
        except ParameterError as error:
            raise ConfigError(str(error), "array")

    def chain_ratios(self) -> Tuple[float, float]:
        """Polariton to optical hopping ratios of the A and B chains."""
        if self.chain_ratio is not None:
            return self.chain_ratio, self.chain_ratio
        return chain_ratios(self._uniform_array([1.0] * (self.cells - 1)))

    def create_plan(self) -> TransferPlan:
        ratio_a, ratio_b = self.chain_ratios()
        if self.scheme == "pst":
            return pst_profile(self.cells, self.J, ratio_a, ratio_b)
        elif self.scheme == "eigenmode":
            if self.lambda_ is None:
                raise ConfigError("The eigenmode scheme needs lambda", "protocol")
            return eigenmode_profile(
                self.cells, self.lambda_, self.J, self.margin, ratio_a, ratio_b
            )
        elif self.scheme == "tunneling":
            if self.lambda_ is None or self.delta is None:
                raise ConfigError("The tunneling scheme needs lambda and delta", "protocol")
            return tunneling_profile(
                self.cells, self.lambda_, self.delta, self.J, self.margin, ratio_a, ratio_b
            )
        raise ConfigError(f"Unknown scheme {self.scheme!r}", "protocol")

    def create_array(self, plan: Optional[TransferPlan] = None) -> ArrayConfig:
        if plan is None:
            plan = self.create_plan()
        return self._uniform_array(list(plan.hops)).with_endpoint_detuning(
            plan.endpoint_detuning
        )

    def create_space(self, excitation_cap: Optional[int] = None) -> HilbertSpace:
        cap = self.excitation_cap if excitation_cap is None else excitation_cap
        return make_array_space(self.cells, self.mode_dim, cap)

    def replace(self, **changes: Any) -> "Config":
        """Return a copy with *changes* applied, used for sweep points."""
        config = copy.copy(self)
        config._log = None
        for key, value in changes.items():
            if key not in self.settings():
                raise ConfigError(f"Unknown setting {key!r}")
            setattr(config, key, value)
        return config

    def to_mapping(self) -> Dict[str, Dict[str, Any]]:
        """Nested echo of every setting, in the plain (unsuffixed) spelling."""
        reverse = {(section, attr): key for (section, key), attr in _ALIASES.items()}
        mapping: Dict[str, Dict[str, Any]] = {}
        for section, names in _SECTIONS.items():
            values = {}
            for name in names:
                value = getattr(self, name)
                if name in {"initial_state", "partner_state"}:
                    value = _state_echo(value)
                elif name == "sweep_states":
                    value = [_state_echo(state) for state in value]
                elif isinstance(value, logging.Logger):
                    value = value.name
                values[reverse.get((section, name), name)] = value
            mapping[section] = values
        return mapping

    @classmethod
    def from_mapping(
        cls: Type["Config"], mapping: Optional[Mapping[str, Any]] = None, **kwargs: Any
    ) -> "Config":
        """Create a configuration from a mapping.

        The mapping is a nested experiment document, sectioned as the files
        are, and is validated against the shipped schema. Keyword arguments
        name attributes directly, for example,

        .. code-block:: python

            config = {'array': {'cells': 4, 'G': 25}, 'protocol': {'J': 1}}
            Config.from_mapping(config)
            Config.from_mapping(cells=4, G=25, J=1)

        Arguments:
            mapping: Optionally a nested experiment mapping.
            kwargs: Optionally a collection of keyword arguments naming
                attributes.
        """
        mappings: Dict[str, Any] = {}
        if mapping is not None:
            validate(mapping)
            mappings.update(_flatten(mapping))
        mappings.update(kwargs)
        settings = cls.settings()
        config = cls()
        for key, value in mappings.items():
            if key not in settings:
                raise ConfigError(f"Unknown setting {key!r}")
            setattr(config, key, value)
        return config

    @classmethod
    def from_toml(cls: Type["Config"], filename: FilePath) -> "Config":
        """Load the configuration values from a TOML formatted file.

        .. code-block:: python

            Config.from_toml('experiment.toml')

        Arguments:
            filename: The filename which gives the path to the file.
        """
        file_path = os.fspath(filename)
        try:
            with open(file_path, "rb") as file_:
                data = tomllib.load(file_)
        except (OSError, tomllib.TOMLDecodeError) as error:
            raise ConfigError(str(error), str(file_path))
        return cls.from_mapping(data)

    @classmethod
    def from_json(cls: Type["Config"], filename: FilePath) -> "Config":
        """Load the configuration values from a JSON formatted file.

        Arguments:
            filename: The filename which gives the path to the file.
        """
        file_path = os.fspath(filename)
        try:
            with open(file_path) as file_:
                data = json.load(file_)
        except (OSError, json.JSONDecodeError) as error:
            raise ConfigError(str(error), str(file_path))
        return cls.from_mapping(data)


def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_PATH) as file_:
        return json.load(file_)


def validate(document: Mapping[str, Any]) -> None:
    validator = jsonschema.Draft7Validator(load_schema())
    error = jsonschema.exceptions.best_match(validator.iter_errors(document))
    if error is not None:
        location = "/".join(str(part) for part in error.absolute_path) or "document"
        raise ConfigError(error.message, location)


def _flatten(document: Mapping[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for section, values in document.items():
        for key, value in values.items():
            if key.endswith(HZ_SUFFIX):
                key, value = key[: -len(HZ_SUFFIX)], TWO_PI * value
            elif key.endswith(RAD_S_SUFFIX):
                key = key[: -len(RAD_S_SUFFIX)]
            attribute = _ALIASES.get((section, key), key)
            if attribute in flat:
                raise ConfigError(f"{key} is given more than once", section)
            flat[attribute] = value
    return flat
