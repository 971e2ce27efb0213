"""Closed and Lindblad propagation over truncated Fock spaces.

Dissipator rates follow the standard Lindblad normalisation, a term
``rate * (L rho L^dag - {L^dag L, rho} / 2)`` per jump operator, so that a
cavity at decay rate ``kappa`` and bath occupation ``n`` contributes
``L = a`` at ``kappa * (1 + n)`` and ``L = a^dag`` at ``kappa * n``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.integrate import solve_ivp

from .fock import (
    annihilation,
    creation,
    HilbertSpace,
    QuantumState,
    SparseOperator,
    total_number_operator,
)
from .model import (
    ArrayConfig,
    DimensionLimitError,
    mechanical_mode,
    MAX_DIM_DENSITY,
    MAX_DIM_PURE,
    ModelKind,
    optical_mode,
    SQRT_HALF,
)
from .typing import ConvergenceRecord
from .utils import OptoArrayError

log = logging.getLogger(__name__)

CLOSED_RTOL = 1e-10
OPEN_RTOL = 1e-8
DEFAULT_ATOL = 1e-12
EIGEN_MAX_DIM = 2000
DRIFT_TOL = 1e-8
CONVERGENCE_TOL = 1e-4
INTEGRATOR = "DOP853"


class IntegrationError(OptoArrayError):
    pass


class ModelKindError(OptoArrayError, ValueError):
    pass


class ConvergenceError(OptoArrayError, ValueError):
    pass


class Method(str, Enum):
    AUTO = "auto"
    EIGEN = "eigen"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class Dissipator:
    operator: SparseOperator
    rate: float

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise ValueError(f"Dissipator rates must be non-negative, got {self.rate!r}")


@dataclass(frozen=True)
class EvolutionSpec:
    hamiltonian: SparseOperator
    dissipators: Tuple[Dissipator, ...] = ()
    t_final: float = 0.0
    rel_tol: Optional[float] = None
    abs_tol: float = DEFAULT_ATOL
    method: Method = Method.AUTO
    frame_frequency: float = 0.0
    force: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "dissipators", tuple(self.dissipators))
        object.__setattr__(self, "method", Method(self.method))
        if self.t_final < 0:
            raise ValueError(f"t_final must be non-negative, got {self.t_final!r}")
        if (self.rel_tol is not None and self.rel_tol <= 0) or self.abs_tol <= 0:
            raise ValueError("Integrator tolerances must be positive")
        for dissipator in self.dissipators:
            if dissipator.operator.space != self.hamiltonian.space:
                raise ValueError("Jump operators must act on the Hamiltonian's space")

    @property
    def space(self) -> HilbertSpace:
        return self.hamiltonian.space

    @property
    def is_open(self) -> bool:
        return any(dissipator.rate > 0 for dissipator in self.dissipators)

    @property
    def tolerance(self) -> float:
        if self.rel_tol is not None:
            return self.rel_tol
        return OPEN_RTOL if self.is_open else CLOSED_RTOL


@dataclass
class Trajectory:
    times: np.ndarray
    states: List[QuantumState]
    norm_drift: float = 0.0
    method: Method = Method.AUTO

    @property
    def final(self) -> QuantumState:
        return self.states[-1]


@dataclass
class ConvergenceReport:
    caps: List[int]
    values: List[float]
    tol: float
    converged_at: Optional[int] = None
    deltas: List[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.converged_at is not None

    def as_record(self) -> ConvergenceRecord:
        return {
            "converged": self.converged,
            "converged_at": self.converged_at,
            "caps": list(self.caps),
            "values": list(self.values),
            "deltas": list(self.deltas),
            "tol": self.tol,
        }


def thermal_dissipators(cfg: ArrayConfig, space: HilbertSpace) -> List[Dissipator]:
    """Cavity and mechanical baths of every cell, zero rates skipped."""
    dissipators = []
    for cell, params in enumerate(cfg.cells):
        for mode, rate, occupation in (
            (optical_mode(cell), params.kappa, params.n_c),
            (mechanical_mode(cell), params.gamma, params.n_m),
        ):
            if rate * (1.0 + occupation) > 0:
                dissipators.append(Dissipator(annihilation(space, mode), rate * (1.0 + occupation)))
            if rate * occupation > 0:
                dissipators.append(Dissipator(creation(space, mode), rate * occupation))
    return dissipators


class _Generator:
    """Sparse pieces of the Lindblad generator, shared by every RHS call."""

    def __init__(self, hamiltonian: sparse.csr_matrix, dissipators: Sequence[Dissipator]) -> None:
        self.jumps = []
        effective = sparse.csr_matrix(hamiltonian, dtype=complex)
        for dissipator in dissipators:
            if dissipator.rate == 0:
                continue
            jump = dissipator.operator.matrix
            self.jumps.append((dissipator.rate, jump, jump.conj().tocsr()))
            effective = effective - 0.5j * dissipator.rate * (jump.conj().T @ jump)
        self.effective = sparse.csr_matrix(effective)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        half = -1j * (self.effective @ rho)
        for rate, jump, jump_conj in self.jumps:
            # (L rho) L^dag as a sparse-dense product
            half += 0.5 * rate * (jump_conj @ (jump @ rho).T).T
        return half + half.conj().T


def lindblad_rhs(rho: QuantumState, spec: EvolutionSpec) -> np.ndarray:
    if rho.space != spec.space:
        raise ValueError("State and generator act on different spaces")
    return _Generator(spec.hamiltonian.matrix, spec.dissipators)(rho.density_matrix())


def conserves_excitations(operator: SparseOperator, atol: float = 1e-12) -> bool:
    commutator = operator.commutator(total_number_operator(operator.space))
    return commutator.max_abs() <= atol * max(operator.max_abs(), 1.0)


def _ladder_shift(operator: SparseOperator) -> Optional[int]:
    totals = operator.space.occupations.sum(axis=1)
    matrix = sparse.coo_matrix(operator.matrix)
    mask = np.abs(matrix.data) > 0
    shifts = set((totals[matrix.row[mask]] - totals[matrix.col[mask]]).tolist())
    return shifts.pop() if len(shifts) == 1 else None


def _check_frame(spec: EvolutionSpec) -> None:
    if not conserves_excitations(spec.hamiltonian):
        raise ModelKindError("A rotating frame needs an excitation conserving Hamiltonian")
    for dissipator in spec.dissipators:
        if _ladder_shift(dissipator.operator) not in {-1, 1}:
            raise ModelKindError("A rotating frame needs single ladder jump operators")


def _frame_phases(space: HilbertSpace, frequency: float, time: float) -> np.ndarray:
    totals = space.occupations.sum(axis=1)
    return np.exp(-1j * frequency * time * totals)


def _resolve_method(spec: EvolutionSpec, dim: int) -> Method:
    if spec.method is Method.AUTO:
        if not spec.is_open and dim <= EIGEN_MAX_DIM:
            return Method.EIGEN
        return Method.ADAPTIVE
    elif spec.method is Method.EIGEN:
        eigen_dim = dim**2 if spec.is_open else dim
        if eigen_dim > EIGEN_MAX_DIM:
            raise DimensionLimitError(eigen_dim, EIGEN_MAX_DIM)
    return spec.method


def _check_dimension(spec: EvolutionSpec, density_matrix: bool) -> None:
    limit = MAX_DIM_DENSITY if density_matrix else MAX_DIM_PURE
    if spec.space.dim > limit:
        if not spec.force:
            raise DimensionLimitError(spec.space.dim, limit)
        log.warning("Dimension guard overridden, dim %d exceeds %d", spec.space.dim, limit)


def _sample_times(spec: EvolutionSpec, times: Optional[Sequence[float]]) -> np.ndarray:
    if times is None:
        return np.array([spec.t_final])
    samples = np.asarray(sorted(float(time) for time in times))
    if samples.size == 0:
        raise ValueError("At least one sample time is required")
    if samples[0] < 0:
        raise ValueError(f"Sample times must be non-negative, got {samples[0]!r}")
    return samples


def _solve(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    samples: np.ndarray,
    spec: EvolutionSpec,
) -> np.ndarray:
    """Integrate and return one row per sample time."""
    outputs = np.empty((samples.size, y0.size), dtype=complex)
    positive = samples > 0
    outputs[~positive] = y0
    if not positive.any():
        return outputs
    solution = solve_ivp(
        rhs,
        (0.0, float(samples[-1])),
        y0,
        method=INTEGRATOR,
        t_eval=samples[positive],
        rtol=spec.tolerance,
        atol=spec.abs_tol,
    )
    if not solution.success:
        raise IntegrationError(f"Integration failed: {solution.message}")
    outputs[positive] = solution.y.T
    return outputs


def _eigen_propagators(
    hamiltonian: sparse.csr_matrix, samples: np.ndarray
) -> Iterator[np.ndarray]:
    energies, vectors = linalg.eigh(hamiltonian.toarray())
    for time in samples:
        yield (vectors * np.exp(-1j * time * energies)) @ vectors.conj().T


def _closed_samples(
    hamiltonian: sparse.csr_matrix, psi0: np.ndarray, samples: np.ndarray, spec: EvolutionSpec
) -> np.ndarray:
    if _resolve_method(spec, psi0.size) is Method.EIGEN:
        return np.array([unitary @ psi0 for unitary in _eigen_propagators(hamiltonian, samples)])

    def rhs(_: float, psi: np.ndarray) -> np.ndarray:
        return -1j * (hamiltonian @ psi)

    return _solve(rhs, psi0, samples, spec)


def _liouvillian(generator: _Generator, dim: int) -> np.ndarray:
    """Dense superoperator acting on row-major flattened density matrices."""
    eye = np.eye(dim)
    effective = generator.effective.toarray()
    superop = -1j * np.kron(effective, eye) + 1j * np.kron(eye, effective.conj())
    for rate, jump, jump_conj in generator.jumps:
        superop += rate * np.kron(jump.toarray(), jump_conj.toarray())
    return superop


def _open_samples(
    generator: _Generator, rho0: np.ndarray, samples: np.ndarray, spec: EvolutionSpec
) -> np.ndarray:
    dim = rho0.shape[0]
    method = _resolve_method(spec, dim)
    if method is Method.EIGEN and not generator.jumps:
        propagators = _eigen_propagators(generator.effective, samples)
        return np.array([(u @ rho0 @ u.conj().T).reshape(-1) for u in propagators])
    elif method is Method.EIGEN:
        superop = _liouvillian(generator, dim)
        flat = rho0.reshape(-1)
        return np.array([linalg.expm(superop * time) @ flat for time in samples])

    def rhs(_: float, y: np.ndarray) -> np.ndarray:
        return generator(y.reshape(dim, dim)).reshape(-1)

    return _solve(rhs, rho0.reshape(-1), samples, spec)


def propagate(
    spec: EvolutionSpec, initial: QuantumState, times: Optional[Sequence[float]] = None
) -> Trajectory:
    """Evolve *initial* and return the states at *times*, default ``[t_final]``.

    Pure states stay pure for closed generators; any positive rate lifts the
    state to a density matrix. Drift in norm or trace is reported on the
    trajectory and never renormalised away.
    """
    if initial.space != spec.space:
        raise ValueError("Initial state and generator act on different spaces")
    if not spec.hamiltonian.is_hermitian():
        raise IntegrationError("The Hamiltonian is not Hermitian")
    samples = _sample_times(spec, times)
    space = spec.space
    mixed = spec.is_open or not initial.is_pure
    _check_dimension(spec, mixed)

    hamiltonian = spec.hamiltonian.matrix
    frame = spec.frame_frequency
    if frame != 0:
        _check_frame(spec)
        hamiltonian = hamiltonian - frame * total_number_operator(space).matrix

    if mixed:
        generator = _Generator(hamiltonian, spec.dissipators)
        rows = _open_samples(generator, initial.density_matrix(), samples, spec)
        data = rows.reshape(samples.size, space.dim, space.dim)
    else:
        data = _closed_samples(sparse.csr_matrix(hamiltonian), initial.data, samples, spec)

    states = []
    for time, values in zip(samples, data):
        if frame != 0:
            phases = _frame_phases(space, frame, time)
            values = phases * values if not mixed else np.outer(phases, phases.conj()) * values
        states.append(QuantumState(space, values))

    drift = max(abs(state.trace() - 1.0) for state in states)
    if drift > DRIFT_TOL:
        log.warning("%s drift %.3e exceeds %.0e", "Trace" if mixed else "Norm", drift, DRIFT_TOL)
    else:
        log.debug("%s drift %.3e", "Trace" if mixed else "Norm", drift)
    method = _resolve_method(spec, space.dim)
    return Trajectory(np.asarray(samples), states, drift, method)


def evolve_closed(
    hamiltonian: SparseOperator,
    psi0: QuantumState,
    t: float,
    spec: Optional[EvolutionSpec] = None,
) -> QuantumState:
    if not psi0.is_pure:
        raise ValueError("Closed evolution needs a pure state")
    if spec is None:
        spec = EvolutionSpec(hamiltonian, t_final=t)
    else:
        spec = replace(spec, hamiltonian=hamiltonian, dissipators=(), t_final=t)
    return propagate(spec, psi0).final


def evolve_open(spec: EvolutionSpec, rho0: QuantumState) -> QuantumState:
    trajectory = propagate(spec, rho0 if not rho0.is_pure else rho0.to_mixed())
    state = trajectory.final
    if state.is_pure:
        return state.to_mixed()
    return state


def single_excitation_hamiltonian(cfg: ArrayConfig) -> np.ndarray:
    """The red-sideband array restricted to one excitation, modes as basis."""
    if cfg.model_kind is not ModelKind.RED_SIDEBAND:
        raise ModelKindError(
            f"The single excitation sector is only closed for red-sideband arrays, "
            f"got {cfg.model_kind.value}"
        )
    matrix = np.zeros((cfg.n_modes, cfg.n_modes))
    for cell, params in enumerate(cfg.cells):
        optical, mechanical = optical_mode(cell), mechanical_mode(cell)
        matrix[optical, optical] = matrix[mechanical, mechanical] = params.omega_m
        matrix[optical, mechanical] = matrix[mechanical, optical] = -params.G
    for bond, hop in enumerate(cfg.hops):
        left, right = optical_mode(bond), optical_mode(bond + 1)
        matrix[left, right] = matrix[right, left] = hop
    return matrix


def single_excitation_oracle(
    cfg: ArrayConfig,
    t: float,
    initial: Optional[np.ndarray] = None,
    hops: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Amplitudes over the 2N single excitation states at time *t*.

    The default initial state is ``(|1,0> + |0,1>) / sqrt(2)`` on the sender.
    """
    if hops is not None:
        cfg = cfg.with_hops(hops)
    matrix = single_excitation_hamiltonian(cfg)
    if initial is None:
        initial = np.zeros(cfg.n_modes, dtype=complex)
        initial[optical_mode(cfg.sender)] = SQRT_HALF
        initial[mechanical_mode(cfg.sender)] = SQRT_HALF
    return linalg.expm(-1j * t * matrix) @ np.asarray(initial, dtype=complex)


def chain_propagator(onsite: Sequence[float], couplings: Sequence[float], t: float) -> np.ndarray:
    """Propagator of a single particle on a tight-binding chain."""
    if len(couplings) != len(onsite) - 1:
        raise ValueError(f"{len(onsite)} sites need {len(onsite) - 1} couplings")
    matrix = np.diag(np.asarray(onsite, dtype=float))
    matrix += np.diag(np.asarray(couplings, dtype=float), 1)
    matrix += np.diag(np.asarray(couplings, dtype=float), -1)
    return linalg.expm(-1j * t * matrix)


def convergence_run(
    evaluate: Callable[[int], float], caps: Sequence[int], tol: float = CONVERGENCE_TOL
) -> ConvergenceReport:
    """Evaluate an observable for ascending excitation caps until it settles."""
    caps = [int(cap) for cap in caps]
    if len(caps) < 2:
        raise ConvergenceError(f"A convergence run needs at least 2 caps, got {caps}")
    if any(later <= earlier for earlier, later in zip(caps, caps[1:])):
        raise ConvergenceError(f"Caps must be strictly ascending, got {caps}")

    report = ConvergenceReport(caps=[], values=[], tol=tol)
    for cap in caps:
        value = float(evaluate(cap))
        if report.values:
            delta = abs(value - report.values[-1])
            report.deltas.append(delta)
        report.caps.append(cap)
        report.values.append(value)
        if report.deltas and report.deltas[-1] < tol:
            report.converged_at = cap
            break

    if report.converged:
        log.info("Converged at cap %d, values %s", report.converged_at, report.values)
    else:
        log.warning("Not converged within caps %s, values %s", caps, report.values)
    return report

