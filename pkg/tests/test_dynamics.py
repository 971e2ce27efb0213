from __future__ import annotations

import math
from typing import List

import numpy as np
import pytest

from optoarray.dynamics import (
    chain_propagator,
    convergence_run,
    ConvergenceError,
    Dissipator,
    evolve_closed,
    evolve_open,
    EvolutionSpec,
    lindblad_rhs,
    Method,
    ModelKindError,
    propagate,
    single_excitation_hamiltonian,
    single_excitation_oracle,
    thermal_dissipators,
)
from optoarray.fock import (
    annihilation,
    creation,
    make_space,
    number_operator,
    QuantumState,
)
from optoarray.model import (
    build_array_hamiltonian,
    CellParams,
    DimensionLimitError,
    initial_sender_state,
    make_array_space,
    mechanical_mode,
    ModelKind,
    optical_mode,
    total_excitation,
    uniform_array,
)
from optoarray.protocols import pst_profile


def test_rabi_oscillation() -> None:
    space = make_space([2, 2], 1)
    coupling = 0.5
    hopping = creation(space, 0) @ annihilation(space, 1)
    hamiltonian = coupling * (hopping + hopping.dag())
    psi0 = QuantumState.pure(space, space.basis_vector((1, 0)))
    final = evolve_closed(hamiltonian, psi0, math.pi / (2 * coupling))
    assert final.data[space.index_of[(0, 1)]] == pytest.approx(-1j, abs=1e-9)
    assert abs(final.data[space.index_of[(1, 0)]]) < 1e-9


def test_diagonal_phases() -> None:
    space = make_space([2])
    vector = (space.basis_vector((0,)) + space.basis_vector((1,))) / math.sqrt(2)
    trajectory = propagate(
        EvolutionSpec(3.0 * number_operator(space, 0)),
        QuantumState.pure(space, vector),
        [0.0, 0.25, 1.0],
    )
    assert trajectory.method is Method.EIGEN
    for time, state in zip(trajectory.times, trajectory.states):
        assert state.data[1] == pytest.approx(np.exp(-3j * time) / math.sqrt(2), abs=1e-12)
    assert trajectory.norm_drift < 1e-12


def test_sample_times_validation() -> None:
    space = make_space([2])
    spec = EvolutionSpec(number_operator(space, 0))
    state = QuantumState.pure(space, space.basis_vector((0,)))
    with pytest.raises(ValueError):
        propagate(spec, state, [])
    with pytest.raises(ValueError):
        propagate(spec, state, [-1.0, 1.0])


def test_eigen_matches_adaptive(red_params: CellParams) -> None:
    cfg = uniform_array(red_params, [1.0, 1.5])
    space = make_array_space(3, 2, 1)
    hamiltonian = build_array_hamiltonian(cfg, space)
    initial = initial_sender_state(space, "phi_plus")
    times = [0.0, 0.3, 1.0]
    eigen = propagate(EvolutionSpec(hamiltonian, method=Method.EIGEN), initial, times)
    adaptive = propagate(EvolutionSpec(hamiltonian, method=Method.ADAPTIVE), initial, times)
    assert adaptive.method is Method.ADAPTIVE
    for left, right in zip(eigen.states, adaptive.states):
        assert np.allclose(left.data, right.data, atol=1e-7)


@pytest.mark.parametrize("method, tol", [(Method.EIGEN, 1e-10), (Method.ADAPTIVE, 1e-8)])
def test_closed_evolution_conserves_energy(
    red_params: CellParams, method: Method, tol: float
) -> None:
    cfg = uniform_array(red_params, [1.0], ModelKind.LINEARIZED)
    space = make_array_space(2, 3, 2)
    hamiltonian = build_array_hamiltonian(cfg, space)
    initial = initial_sender_state(space, "phi_plus")
    trajectory = propagate(
        EvolutionSpec(hamiltonian, method=method), initial, [0.0, 0.5, 1.0, 2.0]
    )
    energy = initial.expect(hamiltonian).real
    for state in trajectory.states:
        assert abs(state.expect(hamiltonian).real - energy) <= tol * abs(energy)


@pytest.mark.parametrize("method", [Method.EIGEN, Method.ADAPTIVE])
def test_red_sideband_conserves_excitations(red_params: CellParams, method: Method) -> None:
    cfg = uniform_array(red_params, [1.0, 1.5])
    space = make_array_space(3, 2, 1)
    hamiltonian = build_array_hamiltonian(cfg, space)
    initial = initial_sender_state(space, "phi_plus")
    trajectory = propagate(EvolutionSpec(hamiltonian, method=method), initial, [0.5, 1.0, 3.0])
    for state in trajectory.states:
        assert total_excitation(state) == pytest.approx(1.0, abs=1e-8)
    if method is Method.EIGEN:
        assert abs(total_excitation(trajectory.final) - 1.0) <= 1e-10


def test_rotating_frame(red_params: CellParams) -> None:
    cfg = uniform_array(red_params, [1.0])
    space = make_array_space(2, 2, 2)
    hamiltonian = build_array_hamiltonian(cfg, space)
    initial = initial_sender_state(space, "phi_plus")
    lab = propagate(EvolutionSpec(hamiltonian, method=Method.ADAPTIVE), initial, [0.7])
    frame = propagate(
        EvolutionSpec(hamiltonian, method=Method.ADAPTIVE, frame_frequency=100.0), initial, [0.7]
    )
    assert np.allclose(lab.final.data, frame.final.data, atol=1e-7)


def test_rotating_frame_needs_conserving_hamiltonian(red_params: CellParams) -> None:
    cfg = uniform_array(red_params, [1.0], ModelKind.LINEARIZED)
    space = make_array_space(2, 2, 2)
    spec = EvolutionSpec(build_array_hamiltonian(cfg, space), frame_frequency=100.0)
    with pytest.raises(ModelKindError):
        propagate(spec, initial_sender_state(space, "phi_plus"), [1.0])


@pytest.mark.parametrize(
    "occupation, time_",
    [(n, t) for n in (0.0, 0.5, 2.0) for t in (0.1, 1.0, 5.0)] + [(0.5, 20.0), (2.0, 20.0)],
)
def test_thermal_decay(occupation: float, time_: float) -> None:
    space = make_space([60])
    kappa = 1.0
    lowering = annihilation(space, 0)
    spec = EvolutionSpec(
        number_operator(space, 0),
        (
            Dissipator(lowering, kappa * (1 + occupation)),
            Dissipator(lowering.dag(), kappa * occupation),
        ),
    )
    initial = QuantumState.pure(space, space.basis_vector((1,)))
    trajectory = propagate(spec, initial, [time_])
    population = trajectory.final.expect(number_operator(space, 0)).real
    expected = occupation + (1 - occupation) * math.exp(-kappa * time_)
    assert population == pytest.approx(expected, abs=1e-6)
    if (occupation, time_) == (0.5, 1.0):
        assert expected == pytest.approx(0.683940, abs=1e-6)
    assert trajectory.norm_drift < 1e-8


def test_thermal_dissipators() -> None:
    params = CellParams(omega_m=1.0, delta_p=-1.0, G=0.1, kappa=2.0, gamma=0.5, n_m=3.0)
    cfg = uniform_array(params, [0.1])
    dissipators = thermal_dissipators(cfg, make_array_space(2, 2, 1))
    # cavity decay, mechanical decay and heating per cell
    assert sorted(dissipator.rate for dissipator in dissipators) == [1.5, 1.5, 2, 2, 2, 2]


def test_lindblad_rhs_preserves_trace_and_hermiticity() -> None:
    space = make_space([3, 3], 2)
    rng = np.random.default_rng(5)
    matrix = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
    rho = matrix @ matrix.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    state = QuantumState.mixed(space, rho / np.trace(rho).real)
    hopping = creation(space, 0) @ annihilation(space, 1)
    spec = EvolutionSpec(
        hopping + hopping.dag(),
        (Dissipator(annihilation(space, 0), 0.3), Dissipator(creation(space, 1), 0.2)),
    )
    derivative = lindblad_rhs(state, spec)
    assert abs(np.trace(derivative)) < 1e-12
    assert np.allclose(derivative, derivative.conj().T, atol=1e-12)


def test_zero_rates_match_closed(red_params: CellParams) -> None:
    cfg = uniform_array(red_params, [1.0])
    space = make_array_space(2, 2, 1)
    hamiltonian = build_array_hamiltonian(cfg, space)
    initial = initial_sender_state(space, "phi_plus")
    spec = EvolutionSpec(hamiltonian, (Dissipator(annihilation(space, 0), 0.0),), t_final=0.8)
    assert not spec.is_open
    closed = evolve_closed(hamiltonian, initial, 0.8)
    opened = evolve_open(spec, initial)
    assert not opened.is_pure
    assert np.allclose(opened.data, closed.density_matrix(), atol=1e-9)


def test_open_eigen_dimension_limit() -> None:
    space = make_space([50])
    spec = EvolutionSpec(
        number_operator(space, 0), (Dissipator(annihilation(space, 0), 1.0),), method=Method.EIGEN
    )
    with pytest.raises(DimensionLimitError):
        propagate(spec, QuantumState.pure(space, space.basis_vector((1,))), [1.0])


def test_single_excitation_sector_agrees(red_params: CellParams) -> None:
    cfg = uniform_array(red_params, [1.0, 0.5])
    space = make_array_space(3, 2, 1)
    trajectory = propagate(
        EvolutionSpec(build_array_hamiltonian(cfg, space)),
        initial_sender_state(space, "phi_plus"),
        [0.9],
    )
    amplitudes = single_excitation_oracle(cfg, 0.9)
    for mode in range(6):
        occupation = tuple(1 if index == mode else 0 for index in range(6))
        assert trajectory.final.data[space.index_of[occupation]] == pytest.approx(
            amplitudes[mode], abs=1e-8
        )


def test_single_excitation_pst() -> None:
    params = CellParams(omega_m=100.0, delta_p=-100.0, G=0.0)
    plan = pst_profile(4, 1.0, chain_ratio_a=0.5)
    cfg = uniform_array(params, plan.hops)
    initial = np.zeros(8, dtype=complex)
    initial[optical_mode(0)] = 1.0
    amplitudes = single_excitation_oracle(cfg, math.pi / 2, initial)
    assert abs(amplitudes[optical_mode(3)]) ** 2 == pytest.approx(1.0, abs=1e-10)
    assert abs(amplitudes[mechanical_mode(3)]) < 1e-10


def test_single_excitation_needs_red_model(red_params: CellParams) -> None:
    cfg = uniform_array(red_params, [1.0], ModelKind.LINEARIZED)
    with pytest.raises(ModelKindError):
        single_excitation_hamiltonian(cfg)


@pytest.mark.parametrize("N", [2, 4, 7])
def test_chain_propagator_pst(N: int) -> None:
    couplings = [0.5 * math.sqrt(n * (N - n)) for n in range(1, N)]
    unitary = chain_propagator([0.0] * N, couplings, math.pi)
    assert abs(unitary[N - 1, 0]) == pytest.approx(1.0, abs=1e-10)


def test_chain_propagator_errors() -> None:
    with pytest.raises(ValueError):
        chain_propagator([0.0, 0.0], [1.0, 1.0], 1.0)


def test_convergence_run() -> None:
    values = {1: 0.5, 2: 0.6, 3: 0.60001, 4: 0.7}
    calls: List[int] = []

    def _evaluate(cap: int) -> float:
        calls.append(cap)
        return values[cap]

    report = convergence_run(_evaluate, [1, 2, 3, 4])
    assert report.converged
    assert report.converged_at == 3
    assert calls == [1, 2, 3]
    assert report.deltas == pytest.approx([0.1, 1e-5])


def test_convergence_run_not_converged() -> None:
    report = convergence_run(float, [1, 2, 3])
    assert not report.converged
    assert report.values == [1.0, 2.0, 3.0]


@pytest.mark.parametrize("caps", [[1], [2, 2], [3, 1]])
def test_convergence_run_errors(caps: List[int]) -> None:
    with pytest.raises(ConvergenceError):
        convergence_run(float, caps)
