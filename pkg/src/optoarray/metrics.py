from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg, optimize

from .fock import DimensionError, partial_trace, QuantumState, total_number_operator
from .model import cell_hamiltonian, CellParams, mechanical_mode, ModelKind, optical_mode
from .polariton import mode_frequencies

log = logging.getLogger(__name__)

FIDELITY_TOL = 1e-12
PHASE_GRID = 64
PHASE_XTOL = 1e-6
FIDELITY_CONVENTION = "squared overlap <psi|rho|psi>"


@dataclass(frozen=True)
class FidelityResult:
    raw_fidelity: float
    corrected_fidelity: float
    phases_used: Tuple[float, float]
    time: float = 0.0


def receiver_state(state: QuantumState, cell: int) -> QuantumState:
    return partial_trace(state, [optical_mode(cell), mechanical_mode(cell)])


def phase_correct(
    rho_R: QuantumState,
    p: CellParams,
    tau: float,
    model_kind: ModelKind = ModelKind.RED_SIDEBAND,
    chain_phase: float = 0.0,
) -> QuantumState:
    """Undo the free polariton rotation of the receiver cell accumulated over *tau*.

    *chain_phase* is an additional phase per excitation, as acquired by the
    mirror map of a perfect transfer chain.
    """
    space = rho_R.space
    if space.num_modes != 2:
        raise DimensionError(2, space.num_modes)
    hamiltonian = cell_hamiltonian(p, space, 0, 1, model_kind).to_dense()
    unitary = linalg.expm(1j * tau * hamiltonian)
    if chain_phase != 0:
        totals = np.real(total_number_operator(space).matrix.diagonal())
        unitary = unitary @ np.diag(np.exp(1j * chain_phase * totals))
    rho = rho_R.density_matrix()
    corrected = unitary @ rho @ unitary.conj().T
    return QuantumState(space, 0.5 * (corrected + corrected.conj().T))


def transfer_fidelity(rho_R: QuantumState, target: QuantumState) -> float:
    if rho_R.space != target.space:
        raise DimensionError(target.space.dim, rho_R.space.dim)
    if not target.is_pure:
        raise ValueError("The target must be a pure state")
    vector = target.data
    if rho_R.is_pure:
        fidelity = abs(np.vdot(vector, rho_R.data)) ** 2
    else:
        fidelity = float(np.real(np.vdot(vector, rho_R.data @ vector)))
    if fidelity < -FIDELITY_TOL or fidelity > 1.0 + FIDELITY_TOL:
        log.warning("Fidelity %.3e outside [0, 1], state is not physical", fidelity)
    return min(max(fidelity, 0.0), 1.0)


def _rotated_fidelities(
    rho: np.ndarray, target: np.ndarray, occupations: np.ndarray, phases: np.ndarray
) -> np.ndarray:
    """Fidelity after ``exp(i (phi_a n_a + phi_b n_b))`` for each row of *phases*."""
    rotated = np.exp(-1j * occupations @ phases.T) * target[:, np.newaxis]
    return np.real(np.sum(rotated.conj() * (rho @ rotated), axis=0))


def max_phase_fidelity(
    rho_R: QuantumState, target: QuantumState, time: float = 0.0, grid: int = PHASE_GRID
) -> FidelityResult:
    """Maximise the fidelity over local phase rotations of the two receiver modes."""
    if rho_R.space != target.space:
        raise DimensionError(target.space.dim, rho_R.space.dim)
    rho = rho_R.density_matrix()
    vector = target.data
    occupations = rho_R.space.occupations.astype(float)

    axis = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    phi_a, phi_b = np.meshgrid(axis, axis, indexing="ij")
    candidates = np.column_stack([phi_a.ravel(), phi_b.ravel()])
    values = _rotated_fidelities(rho, vector, occupations, candidates)
    start = candidates[int(np.argmax(values))]

    def _objective(phases: np.ndarray) -> float:
        return -float(_rotated_fidelities(rho, vector, occupations, phases[np.newaxis, :])[0])

    result = optimize.minimize(
        _objective,
        start,
        method="Nelder-Mead",
        options={"xatol": PHASE_XTOL, "fatol": FIDELITY_TOL},
    )
    best_phases, best = start, float(np.max(values))
    if -result.fun > best:
        best_phases, best = result.x, -float(result.fun)

    raw = transfer_fidelity(rho_R, target)
    phases = tuple(float(phase) % (2.0 * math.pi) for phase in best_phases)
    return FidelityResult(
        raw_fidelity=raw,
        corrected_fidelity=min(max(best, raw), 1.0),
        phases_used=(phases[0], phases[1]),
        time=time,
    )


def analytic_fidelity(
    rho_R: QuantumState,
    target: QuantumState,
    p: CellParams,
    tau: float,
    model_kind: ModelKind = ModelKind.RED_SIDEBAND,
    chain_phase: float = 0.0,
    time: float = 0.0,
) -> FidelityResult:
    lower, upper = mode_frequencies(p, model_kind)
    corrected = phase_correct(rho_R, p, tau, model_kind, chain_phase)
    return FidelityResult(
        raw_fidelity=transfer_fidelity(rho_R, target),
        corrected_fidelity=transfer_fidelity(corrected, target),
        phases_used=(
            (lower * tau + chain_phase) % (2.0 * math.pi),
            (upper * tau + chain_phase) % (2.0 * math.pi),
        ),
        time=time,
    )
