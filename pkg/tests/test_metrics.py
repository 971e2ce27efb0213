from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import linalg

from optoarray.fock import DimensionError, HilbertSpace, make_space, QuantumState
from optoarray.metrics import (
    analytic_fidelity,
    max_phase_fidelity,
    phase_correct,
    receiver_state,
    transfer_fidelity,
)
from optoarray.model import (
    cell_hamiltonian,
    CellParams,
    initial_sender_state,
    make_array_space,
    ModelKind,
    two_mode_state,
)


@pytest.fixture(name="cell_space")
def _cell_space() -> HilbertSpace:
    return make_space([2, 2], 1)


def test_transfer_fidelity(cell_space: HilbertSpace) -> None:
    target = two_mode_state(cell_space, "phi_plus")
    assert transfer_fidelity(target, target) == pytest.approx(1.0)
    vacuum = two_mode_state(cell_space, "vacuum")
    assert transfer_fidelity(vacuum, target) == 0.0
    mixed = np.zeros((3, 3), dtype=complex)
    mixed[cell_space.index_of[(0, 1)], cell_space.index_of[(0, 1)]] = 0.5
    mixed[cell_space.index_of[(1, 0)], cell_space.index_of[(1, 0)]] = 0.5
    assert transfer_fidelity(QuantumState.mixed(cell_space, mixed), target) == pytest.approx(0.5)


def test_transfer_fidelity_errors(cell_space: HilbertSpace) -> None:
    target = two_mode_state(cell_space, "phi_plus")
    with pytest.raises(DimensionError):
        transfer_fidelity(two_mode_state(make_space([2, 2]), "phi_plus"), target)
    with pytest.raises(ValueError):
        transfer_fidelity(target, target.to_mixed())


def test_phase_correct_identity(cell_space: HilbertSpace, red_params: CellParams) -> None:
    state = two_mode_state(cell_space, "phi_plus")
    corrected = phase_correct(state, red_params, 0.0)
    assert np.allclose(corrected.data, state.density_matrix(), atol=1e-12)
    corrected = phase_correct(state, red_params, 0.0, chain_phase=2 * math.pi)
    assert np.allclose(corrected.data, state.density_matrix(), atol=1e-12)


def test_phase_correct_periodic(cell_space: HilbertSpace, red_params: CellParams) -> None:
    state = QuantumState.pure(cell_space, np.array([1.0, 1.0j, 1.0]) / math.sqrt(3))
    period = 2 * math.pi / 25.0
    first = phase_correct(state, red_params, 0.3)
    second = phase_correct(state, red_params, 0.3 + period)
    assert np.allclose(first.data, second.data, atol=1e-9)


def test_phase_correct_undoes_free_rotation(red_params: CellParams) -> None:
    space = make_space([3, 3], 2)
    target = two_mode_state(space, {(0, 0): 1.0, (1, 0): 1.0})
    hamiltonian = cell_hamiltonian(red_params, space, 0, 1, ModelKind.RED_SIDEBAND).to_dense()
    rotated = QuantumState.pure(space, linalg.expm(-0.37j * hamiltonian) @ target.data)
    result = analytic_fidelity(rotated, target, red_params, 0.37)
    assert result.raw_fidelity < 0.99
    assert result.corrected_fidelity == pytest.approx(1.0, abs=1e-10)
    assert result.phases_used[0] == pytest.approx((75.0 * 0.37) % (2 * math.pi))


def test_max_phase_fidelity(cell_space: HilbertSpace) -> None:
    target = QuantumState.pure(cell_space, np.ones(3) / math.sqrt(3))
    phi_a, phi_b = 0.7, 2.1
    amplitudes = np.zeros(3, dtype=complex)
    amplitudes[cell_space.index_of[(0, 0)]] = 1.0
    amplitudes[cell_space.index_of[(1, 0)]] = np.exp(-1j * phi_a)
    amplitudes[cell_space.index_of[(0, 1)]] = np.exp(-1j * phi_b)
    rotated = QuantumState.pure(cell_space, amplitudes / math.sqrt(3))
    result = max_phase_fidelity(rotated, target, time=2.0)
    assert result.raw_fidelity < 0.9
    assert result.corrected_fidelity == pytest.approx(1.0, abs=1e-8)
    assert result.phases_used == pytest.approx((phi_a, phi_b), abs=1e-3)
    assert result.time == 2.0


def test_max_phase_never_below_raw(cell_space: HilbertSpace) -> None:
    target = two_mode_state(cell_space, "phi_plus")
    vacuum = two_mode_state(cell_space, "vacuum")
    result = max_phase_fidelity(vacuum, target)
    assert result.raw_fidelity == result.corrected_fidelity == 0.0


def test_receiver_state() -> None:
    space = make_array_space(2, 2, 1)
    state = initial_sender_state(space, "phi_plus", cell=1)
    receiver = receiver_state(state, 1)
    assert receiver.space == make_space([2, 2], 1)
    phi_plus = two_mode_state(receiver.space, "phi_plus")
    assert transfer_fidelity(receiver, phi_plus) == pytest.approx(1.0)
    vacuum = two_mode_state(receiver.space, "vacuum")
    assert transfer_fidelity(receiver_state(state, 0), vacuum) == pytest.approx(1.0)
