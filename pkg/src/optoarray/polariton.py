"""Polariton (Bogoliubov) decomposition of optomechanical cells.

Each cell is a pair of linearly coupled oscillators. The normal modes are
labelled ``A`` (lower frequency) and ``B`` (upper frequency) and are written
as ``N * (d3 a + d4 b + d1 a^dag + d2 b^dag)``. Nearest neighbour optical
hopping then becomes a hopping of ``A`` and ``B`` polaritons along two
independent chains, once the counter-rotating bond terms are dropped.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from .fock import QuantumState
from .model import ArrayConfig, CellParams, ModelKind, ParameterError
from .typing import RWAReport
from .utils import OptoArrayError

log = logging.getLogger(__name__)

EIGEN_RTOL = 1e-8
ORACLE_TOL = 1e-9
DEFAULT_RWA_MARGIN = 10.0


class InstabilityError(OptoArrayError):
    def __init__(self, message: str, cell: Optional[int] = None) -> None:
        if cell is not None:
            message = f"Cell {cell}: {message}"
        super().__init__(message)
        self.cell = cell


class NonNormalizableError(InstabilityError):
    pass


def polariton_frequencies(p: CellParams, cell: Optional[int] = None) -> Tuple[float, float]:
    """Return the normal-mode frequencies of the linearized cell, ascending."""
    if not p.delta_p < 0:
        raise ParameterError(f"Polaritons need a red detuned pump, got delta_p = {p.delta_p!r}")
    delta, omega, coupling = p.delta_p, p.omega_m, p.G
    radicand = (delta**2 - omega**2) ** 2 - 16.0 * coupling**2 * delta * omega
    plus_sq = 0.5 * (delta**2 + omega**2) + 0.5 * math.sqrt(radicand)
    # product of the two roots, avoids cancellation in the minus branch
    determinant = delta**2 * omega**2 + 4.0 * coupling**2 * delta * omega
    if determinant <= 0:
        raise InstabilityError(
            f"Lower polariton frequency is imaginary, (Omega_-)^2 = {determinant / plus_sq!r}",
            cell,
        )
    return math.sqrt(determinant / plus_sq), math.sqrt(plus_sq)


def mode_frequencies(
    p: CellParams, model_kind: ModelKind, cell: Optional[int] = None
) -> Tuple[float, float]:
    if ModelKind(model_kind) is ModelKind.RED_SIDEBAND:
        lower, upper = p.omega_m - p.G, p.omega_m + p.G
        if lower <= 0:
            raise InstabilityError(f"Beam-splitter mode frequency {lower!r} is not positive", cell)
        return lower, upper
    return polariton_frequencies(p, cell)


def dynamical_matrix(p: CellParams) -> np.ndarray:
    """First-order equations of motion for the quadratures ``(x_a, x_b, p_a, p_b)``."""
    detuning = abs(p.delta_p)
    momentum = np.diag([detuning, p.omega_m])
    position = np.array([[detuning, -2.0 * p.G], [-2.0 * p.G, p.omega_m]])
    zero = np.zeros((2, 2))
    return np.block([[zero, momentum], [-position, zero]])


def symplectic_oracle(p: CellParams, cell: Optional[int] = None) -> Tuple[float, float]:
    eigenvalues = linalg.eigvals(dynamical_matrix(p))
    scale = max(abs(p.delta_p), p.omega_m)
    for eigenvalue in eigenvalues:
        if abs(eigenvalue.real) > ORACLE_TOL * scale:
            raise InstabilityError(f"Dynamical matrix has eigenvalue {eigenvalue!r}", cell)
    frequencies = sorted(float(value.imag) for value in eigenvalues if value.imag > 0)
    if len(frequencies) != 2 or frequencies[0] <= ORACLE_TOL * scale:
        raise InstabilityError(f"Dynamical matrix has eigenvalues {list(eigenvalues)!r}", cell)
    return frequencies[0], frequencies[1]


def check_stability(p: CellParams) -> bool:
    return p.G < stability_bound(p)


def stability_bound(p: CellParams) -> float:
    return 0.5 * math.sqrt(p.omega_m**2 + (p.gamma**2 + p.kappa**2) / 4.0)


@dataclass(frozen=True)
class BogoliubovMode:
    omega: float
    delta1: complex
    delta2: complex
    delta3: complex
    delta4: complex
    norm: float

    @property
    def optical(self) -> complex:
        """Coefficient of ``a`` in the normalised mode operator."""
        return self.norm * self.delta3

    @property
    def mechanical(self) -> complex:
        return self.norm * self.delta4

    @property
    def optical_conj(self) -> complex:
        """Coefficient of ``a^dag`` in the normalised mode operator."""
        return self.norm * self.delta1

    @property
    def mechanical_conj(self) -> complex:
        return self.norm * self.delta2

    @property
    def vector(self) -> np.ndarray:
        """Normalised coefficients over ``(a, b, a^dag, b^dag)``."""
        return np.array(
            [self.optical, self.mechanical, self.optical_conj, self.mechanical_conj], dtype=complex
        )


@dataclass(frozen=True)
class CellPolaritons:
    minus: BogoliubovMode
    plus: BogoliubovMode
    degenerate: bool = False
    corrected: bool = False


@dataclass(frozen=True)
class Bond:
    lambda_: float
    zeta: float


@dataclass(frozen=True)
class PolaritonDecomposition:
    cells: Tuple[CellPolaritons, ...]
    bonds: Tuple[Bond, ...]

    @property
    def omega_minus(self) -> List[float]:
        return [cell.minus.omega for cell in self.cells]

    @property
    def omega_plus(self) -> List[float]:
        return [cell.plus.omega for cell in self.cells]

    @property
    def lambdas(self) -> List[float]:
        return [bond.lambda_ for bond in self.bonds]

    @property
    def zetas(self) -> List[float]:
        return [bond.zeta for bond in self.bonds]


def heisenberg_matrix(p: CellParams) -> np.ndarray:
    """Matrix ``K`` with ``[v_i, H] = K_ij v_j`` for ``v = (a, b, a^dag, b^dag)``."""
    detuning, omega, coupling = abs(p.delta_p), p.omega_m, p.G
    return np.array(
        [
            [detuning, -coupling, 0.0, -coupling],
            [-coupling, omega, -coupling, 0.0],
            [0.0, coupling, -detuning, coupling],
            [coupling, 0.0, coupling, -omega],
        ]
    )


def printed_coefficients(p: CellParams, omega: float) -> Tuple[float, float, float, float]:
    """Closed-form ``(d1, d2, d3, d4)`` as quoted for the linearized cell."""
    detuning, omega_m, coupling = abs(p.delta_p), p.omega_m, p.G
    delta1 = 2.0 * coupling**2 * omega_m - (omega - omega_m) * (omega - detuning) * (
        omega + omega_m
    )
    delta2 = coupling * (omega - detuning) * (omega - omega_m)
    delta3 = 2.0 * coupling**2 * omega_m
    delta4 = coupling * (omega - detuning) * (omega + omega_m)
    return delta1, delta2, delta3, delta4


def _symplectic_norm(vector: np.ndarray) -> float:
    return float(
        abs(vector[0]) ** 2 + abs(vector[1]) ** 2 - abs(vector[2]) ** 2 - abs(vector[3]) ** 2
    )


def _numerical_mode(kernel: np.ndarray, omega: float, cell: Optional[int]) -> BogoliubovMode:
    eigenvalues, eigenvectors = linalg.eig(kernel.T)
    index = int(np.argmin(np.abs(eigenvalues - omega)))
    vector = eigenvectors[:, index]
    norm_sq = _symplectic_norm(vector)
    if norm_sq <= 0:
        raise NonNormalizableError(f"Mode at {omega!r} has symplectic norm {norm_sq!r}", cell)
    vector = vector / math.sqrt(norm_sq)
    pivot = vector[0] if abs(vector[0]) > 1e-12 else vector[1]
    vector = vector * (abs(pivot) / pivot)
    return BogoliubovMode(
        omega=omega,
        delta1=complex(vector[2]),
        delta2=complex(vector[3]),
        delta3=complex(vector[0]),
        delta4=complex(vector[1]),
        norm=1.0,
    )


def _printed_mode(p: CellParams, omega: float) -> Tuple[Optional[BogoliubovMode], float]:
    delta1, delta2, delta3, delta4 = printed_coefficients(p, omega)
    coefficients = np.array([delta3, delta4, delta1, delta2], dtype=complex)
    norm_sq = _symplectic_norm(coefficients)
    scale = np.linalg.norm(coefficients)
    if norm_sq <= 0 or scale == 0:
        return None, math.inf
    kernel = heisenberg_matrix(p)
    residual = np.linalg.norm(kernel.T @ coefficients - omega * coefficients)
    relative = float(residual / (np.linalg.norm(kernel, 2) * scale))
    mode = BogoliubovMode(omega, delta1, delta2, delta3, delta4, 1.0 / math.sqrt(norm_sq))
    return mode, relative


_corrections_reported = False


def bogoliubov_coefficients(
    p: CellParams,
    model_kind: ModelKind = ModelKind.LINEARIZED,
    cell: Optional[int] = None,
) -> CellPolaritons:
    """Normal-mode coefficients of one cell at both polariton frequencies.

    The closed-form coefficients are used when they satisfy the Heisenberg
    eigen-equation; otherwise the numerically obtained eigenvectors replace
    them and ``corrected`` is set.
    """
    global _corrections_reported

    if ModelKind(model_kind) is ModelKind.RED_SIDEBAND:
        lower, upper = mode_frequencies(p, model_kind, cell)
        half = 1.0 / math.sqrt(2.0)
        return CellPolaritons(
            minus=BogoliubovMode(lower, 0.0, 0.0, half, half, 1.0),
            plus=BogoliubovMode(upper, 0.0, 0.0, half, -half, 1.0),
        )

    lower, upper = polariton_frequencies(p, cell)
    if p.G == 0 and math.isclose(abs(p.delta_p), p.omega_m):
        return CellPolaritons(
            minus=BogoliubovMode(lower, 0.0, 0.0, 1.0, 0.0, 1.0),
            plus=BogoliubovMode(upper, 0.0, 0.0, 0.0, 1.0, 1.0),
            degenerate=True,
        )

    kernel = heisenberg_matrix(p)
    modes = []
    corrected = False
    for omega in (lower, upper):
        mode, residual = _printed_mode(p, omega)
        if mode is None or residual > EIGEN_RTOL:
            corrected = True
            mode = _numerical_mode(kernel, omega, cell)
        modes.append(mode)

    if corrected:
        level = logging.DEBUG if _corrections_reported else logging.WARNING
        log.log(
            level,
            "Closed-form Bogoliubov coefficients fail the eigen-equation for %r, "
            "using the numerical symplectic eigenvectors",
            p,
        )
        _corrections_reported = True
    return CellPolaritons(minus=modes[0], plus=modes[1], corrected=corrected)


def _hop(left: BogoliubovMode, right: BogoliubovMode, hop: float) -> float:
    amplitude = hop * (
        left.optical * np.conj(right.optical) + left.optical_conj * np.conj(right.optical_conj)
    )
    return float(amplitude.real)


def effective_couplings(
    p_n: CellParams,
    p_np1: CellParams,
    J_n: float,
    model_kind: ModelKind = ModelKind.LINEARIZED,
) -> Tuple[float, float]:
    """Polariton hopping ``(lambda_n, zeta_n)`` induced by optical hopping ``J_n``."""
    if J_n == 0:
        return 0.0, 0.0
    left = bogoliubov_coefficients(p_n, model_kind)
    right = bogoliubov_coefficients(p_np1, model_kind)
    return _hop(left.minus, right.minus, J_n), _hop(left.plus, right.plus, J_n)


def decompose(cfg: ArrayConfig) -> PolaritonDecomposition:
    cells = tuple(
        bogoliubov_coefficients(params, cfg.model_kind, index)
        for index, params in enumerate(cfg.cells)
    )
    bonds = tuple(
        Bond(*effective_couplings(cfg.cells[index], cfg.cells[index + 1], hop, cfg.model_kind))
        for index, hop in enumerate(cfg.hops)
    )
    return PolaritonDecomposition(cells, bonds)


def chain_ratios(cfg: ArrayConfig) -> Tuple[float, float]:
    """Ratios ``lambda_n / J_n`` and ``zeta_n / J_n`` of the first bond at unit hopping."""
    lambda_, zeta = effective_couplings(cfg.cells[0], cfg.cells[1], 1.0, cfg.model_kind)
    return abs(lambda_), abs(zeta)


def check_rwa(
    cfg: ArrayConfig, state: QuantumState, margin: float = DEFAULT_RWA_MARGIN
) -> RWAReport:
    """Compare the smallest polariton gap with the excitation-weighted hopping."""
    lhs = math.inf
    for index, params in enumerate(cfg.cells):
        lower, upper = mode_frequencies(params, cfg.model_kind, index)
        lhs = min(lhs, lower, upper - lower)

    decomposition = decompose(cfg)
    hopping = max(
        (abs(bond.lambda_) + abs(bond.zeta) for bond in decomposition.bonds), default=0.0
    )
    excitations = max(float(np.sum(state.mode_populations())), 0.0)
    rhs = math.sqrt(excitations) * hopping
    ratio = math.inf if rhs == 0 else lhs / rhs
    return {"ok": ratio >= margin, "lhs": lhs, "rhs": rhs, "ratio": ratio, "margin": margin}
