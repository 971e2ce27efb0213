from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .fock import (
    annihilation,
    creation,
    DimensionError,
    HilbertSpace,
    make_space,
    number_operator,
    QuantumState,
    SparseOperator,
    zero_operator,
)
from .typing import TwoModeSpec
from .utils import OptoArrayError

log = logging.getLogger(__name__)

MAX_DIM_PURE = 20000
MAX_DIM_DENSITY = 5000
RED_SIDEBAND_RTOL = 1e-6
COUPLING_RTOL = 1e-9

SQRT_HALF = 1.0 / math.sqrt(2.0)


class ParameterError(OptoArrayError, ValueError):
    pass


class StateSpecError(OptoArrayError, ValueError):
    pass


class DimensionLimitError(OptoArrayError):
    def __init__(self, dim: int, limit: int) -> None:
        super().__init__(
            f"Hilbert space dimension {dim} exceeds the limit {limit}, "
            "reduce the truncation or force the run"
        )
        self.dim = dim
        self.limit = limit


class ModelKindWarning(UserWarning):
    pass


class ModelKind(str, Enum):
    LINEARIZED = "linearized"
    RED_SIDEBAND = "red_sideband"


@dataclass(frozen=True)
class CellParams:
    omega_m: float
    delta_p: float
    G: float
    kappa: float = 0.0
    gamma: float = 0.0
    n_c: float = 0.0
    n_m: float = 0.0
    g: Optional[float] = None
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.omega_m > 0:
            raise ParameterError(f"omega_m must be positive, got {self.omega_m!r}")
        for name in ("kappa", "gamma", "n_c", "n_m"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if self.G < 0:
            raise ParameterError(f"G must be non-negative, got {self.G!r}")
        if self.g is not None and self.alpha is not None:
            expected = self.alpha * self.g
            if not math.isclose(self.G, expected, rel_tol=COUPLING_RTOL, abs_tol=0.0):
                raise ParameterError(f"G = {self.G!r} does not equal alpha * g = {expected!r}")

    @property
    def is_red_sideband(self) -> bool:
        return abs(self.delta_p + self.omega_m) <= RED_SIDEBAND_RTOL * self.omega_m


@dataclass(frozen=True)
class ArrayConfig:
    """An array of optomechanical cells coupled by optical hopping.

    Cells are 0-indexed and the modes are laid out as
    ``(a_0, b_0, a_1, b_1, ...)``, see :func:`optical_mode` and
    :func:`mechanical_mode`.
    """

    cells: Tuple[CellParams, ...]
    hops: Tuple[float, ...]
    model_kind: ModelKind = ModelKind.RED_SIDEBAND
    sender: int = 0
    receiver: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "hops", tuple(float(hop) for hop in self.hops))
        object.__setattr__(self, "model_kind", ModelKind(self.model_kind))
        if len(self.cells) < 2:
            raise ParameterError(f"An array needs at least 2 cells, got {len(self.cells)}")
        if len(self.hops) != len(self.cells) - 1:
            raise ParameterError(
                f"{len(self.cells)} cells need {len(self.cells) - 1} hops, got {len(self.hops)}"
            )
        if any(hop < 0 for hop in self.hops):
            raise ParameterError(f"Hopping strengths must be non-negative, got {self.hops}")
        if self.model_kind is ModelKind.RED_SIDEBAND:
            for index, cell in enumerate(self.cells):
                if not cell.is_red_sideband:
                    raise ParameterError(
                        f"Cell {index} is not red detuned, delta_p = {cell.delta_p!r} and "
                        f"omega_m = {cell.omega_m!r}"
                    )
        if self.receiver is None:
            object.__setattr__(self, "receiver", len(self.cells) - 1)
        for name in ("sender", "receiver"):
            self._check_cell(getattr(self, name))
        if self.sender == self.receiver:
            raise ParameterError(f"Sender and receiver are both cell {self.sender}")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_modes(self) -> int:
        return 2 * len(self.cells)

    def _check_cell(self, cell: int) -> None:
        if not 0 <= cell < len(self.cells):
            raise ParameterError(f"Cell {cell} out of range for {len(self.cells)} cells")

    def with_hops(self, hops: Sequence[float]) -> ArrayConfig:
        return replace(self, hops=tuple(hops))

    def with_endpoint_detuning(self, delta: float) -> ArrayConfig:
        """Shift the first and last mechanical frequencies by *delta*.

        The pump detuning moves by ``-delta`` so that red-detuned cells stay
        on the sideband.
        """
        if delta == 0:
            return self
        cells = list(self.cells)
        for index in (0, len(cells) - 1):
            cell = cells[index]
            cells[index] = replace(
                cell, omega_m=cell.omega_m + delta, delta_p=cell.delta_p - delta
            )
        return replace(self, cells=tuple(cells))


def uniform_array(
    params: CellParams,
    hops: Sequence[float],
    model_kind: ModelKind = ModelKind.RED_SIDEBAND,
    sender: int = 0,
    receiver: Optional[int] = None,
) -> ArrayConfig:
    return ArrayConfig(
        cells=tuple(params for _ in range(len(hops) + 1)),
        hops=tuple(hops),
        model_kind=model_kind,
        sender=sender,
        receiver=receiver,
    )


def optical_mode(cell: int) -> int:
    return 2 * cell


def mechanical_mode(cell: int) -> int:
    return 2 * cell + 1


def make_array_space(
    n_cells: int, mode_dim: int, excitation_cap: Optional[int] = None
) -> HilbertSpace:
    return make_space([mode_dim] * (2 * n_cells), excitation_cap)


def _check_layout(cfg: ArrayConfig, space: HilbertSpace) -> None:
    if space.num_modes != cfg.n_modes:
        raise DimensionError(cfg.n_modes, space.num_modes)


def cell_hamiltonian(
    p: CellParams,
    space: HilbertSpace,
    optical: int,
    mechanical: int,
    model_kind: ModelKind,
) -> SparseOperator:
    a = annihilation(space, optical)
    b = annihilation(space, mechanical)
    n_a = number_operator(space, optical)
    n_b = number_operator(space, mechanical)
    if ModelKind(model_kind) is ModelKind.RED_SIDEBAND:
        exchange = a.dag() @ b + b.dag() @ a
        return p.omega_m * (n_a + n_b) - p.G * exchange
    else:
        # lowering applied first so capped products keep every admissible element
        coupling = a @ b + a.dag() @ b + b.dag() @ a + a.dag() @ b.dag()
        return -p.delta_p * n_a + p.omega_m * n_b - p.G * coupling


def build_cell_hamiltonian_linearized(
    cfg: ArrayConfig, space: HilbertSpace, cell: int
) -> SparseOperator:
    _check_layout(cfg, space)
    cfg._check_cell(cell)
    return cell_hamiltonian(
        cfg.cells[cell], space, optical_mode(cell), mechanical_mode(cell), ModelKind.LINEARIZED
    )


def build_cell_hamiltonian_red(cfg: ArrayConfig, space: HilbertSpace, cell: int) -> SparseOperator:
    _check_layout(cfg, space)
    cfg._check_cell(cell)
    if cfg.model_kind is not ModelKind.RED_SIDEBAND:
        warnings.warn(
            f"Building a red-sideband cell for a {cfg.model_kind.value} array", ModelKindWarning
        )
    return cell_hamiltonian(
        cfg.cells[cell], space, optical_mode(cell), mechanical_mode(cell), ModelKind.RED_SIDEBAND
    )


def build_hopping(cfg: ArrayConfig, space: HilbertSpace) -> SparseOperator:
    _check_layout(cfg, space)
    hopping = zero_operator(space)
    for bond, strength in enumerate(cfg.hops):
        if strength == 0:
            continue
        forward = creation(space, optical_mode(bond)) @ annihilation(
            space, optical_mode(bond + 1)
        )
        hopping = hopping + strength * (forward + forward.dag())
    return hopping


def build_array_hamiltonian(
    cfg: ArrayConfig,
    space: HilbertSpace,
    *,
    density_matrix: bool = False,
    force: bool = False,
    max_dim: Optional[int] = None,
) -> SparseOperator:
    _check_layout(cfg, space)
    limit = max_dim
    if limit is None:
        limit = MAX_DIM_DENSITY if density_matrix else MAX_DIM_PURE
    if space.dim > limit:
        if not force:
            raise DimensionLimitError(space.dim, limit)
        log.warning("Dimension guard overridden, dim %d exceeds %d", space.dim, limit)

    if cfg.model_kind is ModelKind.RED_SIDEBAND:
        builder = build_cell_hamiltonian_red
    else:
        builder = build_cell_hamiltonian_linearized
    hamiltonian = zero_operator(space)
    for cell in range(cfg.n_cells):
        hamiltonian = hamiltonian + builder(cfg, space, cell)
    return hamiltonian + build_hopping(cfg, space)


def two_mode_amplitudes(spec: TwoModeSpec) -> Dict[Tuple[int, int], complex]:
    """Resolve a named or explicit two-mode state into normalised amplitudes."""
    if isinstance(spec, str):
        if spec == "phi_plus":
            return {(1, 0): SQRT_HALF, (0, 1): SQRT_HALF}
        elif spec == "Phi_plus":
            return {(2, 0): SQRT_HALF, (0, 2): SQRT_HALF}
        elif spec == "vacuum":
            return {(0, 0): 1.0}
        raise StateSpecError(f"Unknown state {spec!r}")

    if isinstance(spec, Mapping):
        amplitudes = {
            (int(n_a), int(n_b)): complex(value) for (n_a, n_b), value in spec.items()
        }
    else:
        try:
            n_a, n_b = spec
        except (TypeError, ValueError):
            raise StateSpecError(f"Cannot interpret {spec!r} as a two-mode state")
        amplitudes = {(int(n_a), int(n_b)): 1.0 + 0.0j}

    if any(n_a < 0 or n_b < 0 for n_a, n_b in amplitudes):
        raise StateSpecError(f"Occupations must be non-negative, got {list(amplitudes)}")
    norm = math.sqrt(sum(abs(value) ** 2 for value in amplitudes.values()))
    if norm == 0:
        raise StateSpecError("A two-mode state needs at least one non-zero amplitude")
    return {key: value / norm for key, value in amplitudes.items()}


def _describe(spec: TwoModeSpec) -> str:
    return spec if isinstance(spec, str) else repr(spec)


def cell_product_state(space: HilbertSpace, specs: Mapping[int, TwoModeSpec]) -> QuantumState:
    """Product state with the given two-mode states on some cells, vacuum elsewhere."""
    if space.num_modes % 2 != 0:
        raise DimensionError(space.num_modes + 1, space.num_modes)
    n_cells = space.num_modes // 2
    terms: Iterable[Tuple[Tuple[int, ...], complex]] = [((0,) * space.num_modes, 1.0 + 0.0j)]
    for cell, spec in sorted(specs.items()):
        if not 0 <= cell < n_cells:
            raise StateSpecError(f"Cell {cell} out of range for {n_cells} cells")
        amplitudes = two_mode_amplitudes(spec)
        expanded = []
        for occupation, amplitude in terms:
            for (n_a, n_b), value in amplitudes.items():
                updated = list(occupation)
                updated[optical_mode(cell)] = n_a
                updated[mechanical_mode(cell)] = n_b
                expanded.append((tuple(updated), amplitude * value))
        terms = expanded

    vector = np.zeros(space.dim, dtype=complex)
    for occupation, amplitude in terms:
        if not space.admits(occupation):
            raise StateSpecError(
                f"State {_describe(dict(specs))} needs occupation {occupation}, outside "
                f"mode dims {list(space.mode_dims)} with cap {space.excitation_cap}"
            )
        vector[space.index_of[occupation]] += amplitude
    return QuantumState.pure(space, vector)


def two_mode_state(space: HilbertSpace, spec: TwoModeSpec) -> QuantumState:
    if space.num_modes != 2:
        raise DimensionError(2, space.num_modes)
    return cell_product_state(space, {0: spec})


def initial_sender_state(
    space: HilbertSpace, spec: TwoModeSpec, cell: int = 0
) -> QuantumState:
    return cell_product_state(space, {cell: spec})


def total_excitation(state: QuantumState) -> float:
    return float(np.sum(state.mode_populations()))


def cell_populations(state: QuantumState) -> Dict[str, float]:
    populations = state.mode_populations()
    result: Dict[str, float] = {}
    for cell in range(state.space.num_modes // 2):
        result[f"n_a_{cell}"] = float(populations[optical_mode(cell)])
        result[f"n_b_{cell}"] = float(populations[mechanical_mode(cell)])
    return result

