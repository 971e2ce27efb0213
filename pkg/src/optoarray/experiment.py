from __future__ import annotations

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import Config, ConfigError
from .dynamics import (
    convergence_run,
    ConvergenceReport,
    EvolutionSpec,
    Method,
    propagate,
    thermal_dissipators,
    Trajectory,
)
from .fock import HilbertSpace, make_space, QuantumState
from .metrics import analytic_fidelity, max_phase_fidelity, receiver_state
from .model import (
    ArrayConfig,
    build_array_hamiltonian,
    cell_populations,
    cell_product_state,
    mechanical_mode,
    ModelKind,
    optical_mode,
    total_excitation,
    two_mode_state,
)
from .protocols import TransferPlan
from .typing import BidirectionalRow, SampleRow, TwoModeSpec

log = logging.getLogger(__name__)

BIDIRECTIONAL_INTERPRETATION = "mirror-symmetric simultaneous PST"


def state_label(spec: TwoModeSpec) -> str:
    if isinstance(spec, str):
        return spec
    if isinstance(spec, tuple):
        return f"|{spec[0]},{spec[1]}>"
    return " + ".join(
        f"({amplitude.real:g}{amplitude.imag:+g}j)|{n_a},{n_b}>"
        for (n_a, n_b), amplitude in spec.items()
    )


class TransferExperiment:
    """A configured transfer from the sender to the receiver cell.

    The plan and the array are resolved once; Hilbert spaces, generators
    and states are built per excitation cap so that convergence runs can
    reuse the same experiment.
    """

    def __init__(self, config: Config, plan: Optional[TransferPlan] = None) -> None:
        self.config = config
        self.plan = config.create_plan() if plan is None else plan
        self.array: ArrayConfig = config.create_array(self.plan)
        self.convergence: Optional[ConvergenceReport] = None
        self.trajectory: Optional[Trajectory] = None
        self.spec: Optional[EvolutionSpec] = None

    @property
    def tau(self) -> float:
        return self.plan.tau

    @property
    def t_final(self) -> float:
        return self.tau if self.config.t_final is None else self.config.t_final

    @property
    def sender(self) -> int:
        return self.array.sender

    @property
    def receiver(self) -> int:
        return self.array.receiver

    def sample_times(self) -> np.ndarray:
        if self.config.samples == 1:
            return np.array([self.t_final])
        return np.linspace(0.0, self.t_final, self.config.samples)

    def frame_frequency(self) -> float:
        if self.array.model_kind is ModelKind.RED_SIDEBAND and self.config.rotating_frame:
            return self.array.cells[self.sender].omega_m
        return 0.0

    def evolution_spec(self, space: HilbertSpace, t_final: Optional[float] = None) -> EvolutionSpec:
        config = self.config
        hamiltonian = build_array_hamiltonian(
            self.array,
            space,
            density_matrix=config.open_system,
            force=config.force_dim,
            max_dim=config.max_dim_density if config.open_system else config.max_dim_pure,
        )
        dissipators = thermal_dissipators(self.array, space) if config.open_system else []
        return EvolutionSpec(
            hamiltonian,
            dissipators=tuple(dissipators),
            t_final=self.t_final if t_final is None else t_final,
            rel_tol=config.rel_tol,
            abs_tol=config.abs_tol,
            method=Method(config.method),
            frame_frequency=self.frame_frequency(),
            force=config.force_dim,
        )

    def initial_state(self, space: HilbertSpace, partner: bool = False) -> QuantumState:
        specs = {self.sender: self.config.initial_state}
        if partner:
            specs[self.receiver] = self.config.partner_state
        return cell_product_state(space, specs)

    def target(self, space: HilbertSpace, spec: TwoModeSpec, cell: int) -> QuantumState:
        cell_space = make_space(
            [space.mode_dims[optical_mode(cell)], space.mode_dims[mechanical_mode(cell)]],
            space.excitation_cap,
        )
        return two_mode_state(cell_space, spec)

    def _evolve(
        self, excitation_cap: Optional[int], times: Sequence[float], partner: bool = False
    ) -> Tuple[HilbertSpace, Trajectory]:
        space = self.config.create_space(excitation_cap)
        spec = self.evolution_spec(space, t_final=max(times))
        log.debug(
            "Evolving dim %d over %d samples, open %s", space.dim, len(times), spec.is_open
        )
        trajectory = propagate(spec, self.initial_state(space, partner), times)
        self.spec = spec
        return space, trajectory

    def _fidelities(
        self, state: QuantumState, cell: int, target: QuantumState, time_: float
    ) -> Tuple[float, float]:
        result = analytic_fidelity(
            receiver_state(state, cell),
            target,
            self.array.cells[cell],
            time_,
            self.array.model_kind,
            self.plan.chain_phase,
            time_,
        )
        return result.raw_fidelity, result.corrected_fidelity

    def corrected_fidelity_at_tau(self, excitation_cap: Optional[int] = None) -> float:
        space, trajectory = self._evolve(excitation_cap, [self.tau])
        target = self.target(space, self.config.initial_state, self.receiver)
        return self._fidelities(trajectory.final, self.receiver, target, self.tau)[1]

    def measure_at_tau(self) -> Dict[str, float]:
        """Fidelities and trace of the receiver at the transfer time."""
        space, trajectory = self._evolve(None, [self.tau])
        state = trajectory.final
        target = self.target(space, self.config.initial_state, self.receiver)
        raw, corrected = self._fidelities(state, self.receiver, target, self.tau)
        best = max_phase_fidelity(receiver_state(state, self.receiver), target, self.tau)
        return {
            "tau": self.tau,
            "raw_fidelity": raw,
            "corrected_fidelity": corrected,
            "max_phase_fidelity": best.corrected_fidelity,
            "trace": state.trace(),
        }

    def run(self) -> List[SampleRow]:
        times = self.sample_times()
        space, trajectory = self._evolve(None, times)
        self.trajectory = trajectory
        target = self.target(space, self.config.initial_state, self.receiver)
        rows: List[SampleRow] = []
        for time_, state in zip(trajectory.times, trajectory.states):
            raw, corrected = self._fidelities(state, self.receiver, target, float(time_))
            best = max_phase_fidelity(receiver_state(state, self.receiver), target, float(time_))
            row: Dict[str, Any] = {
                "time_s": float(time_),
                "raw_fidelity": raw,
                "corrected_fidelity": corrected,
                "max_phase_fidelity": best.corrected_fidelity,
                "trace": state.trace(),
                "total_excitation": total_excitation(state),
                "min_eigenvalue": state.min_eigenvalue(),
            }
            row.update(cell_populations(state))
            rows.append(row)  # type: ignore
        return rows

    def check_convergence(self) -> Optional[ConvergenceReport]:
        if not self.config.convergence_caps:
            return None
        self.convergence = convergence_run(
            self.corrected_fidelity_at_tau,
            self.config.convergence_caps,
            self.config.convergence_tol,
        )
        return self.convergence

    def run_bidirectional(self) -> List[BidirectionalRow]:
        """Launch the initial state at the sender and the partner state at the
        receiver at once, and follow both arrivals."""
        if self.plan.scheme != "pst":
            raise ConfigError(
                f"Bidirectional transfer needs the pst scheme, got {self.plan.scheme}", "protocol"
            )
        times = self.sample_times()
        space, trajectory = self._evolve(None, times, partner=True)
        self.trajectory = trajectory
        at_receiver = self.target(space, self.config.initial_state, self.receiver)
        at_sender = self.target(space, self.config.partner_state, self.sender)
        rows: List[BidirectionalRow] = []
        for time_, state in zip(trajectory.times, trajectory.states):
            receiver_raw, receiver_corrected = self._fidelities(
                state, self.receiver, at_receiver, float(time_)
            )
            sender_raw, sender_corrected = self._fidelities(
                state, self.sender, at_sender, float(time_)
            )
            rows.append(
                {
                    "time_s": float(time_),
                    "receiver_raw_fidelity": receiver_raw,
                    "receiver_corrected_fidelity": receiver_corrected,
                    "sender_raw_fidelity": sender_raw,
                    "sender_corrected_fidelity": sender_corrected,
                    "trace": state.trace(),
                }
            )
        return rows

    def metadata(self) -> Dict[str, Any]:
        """Plan, truncation, integrator and convergence record of the last run."""
        spec = self.spec
        if spec is None:
            spec = self.evolution_spec(self.config.create_space())
        space = spec.space
        plan = self.plan
        data: Dict[str, Any] = {
            "plan": {
                "scheme": plan.scheme,
                "hops": list(plan.hops),
                "tau_A": plan.tau_A,
                "tau_B": plan.tau_B,
                "compatible": plan.compatible,
                "compatibility_ratio": plan.compatibility_ratio,
                "chain_phase": plan.chain_phase,
                "endpoint_detuning": plan.endpoint_detuning,
                "peak_hop": plan.peak_hop,
                "quoted_peak_hop": plan.quoted_peak_hop,
                "warnings": list(plan.warnings),
            },
            "truncation": {
                "mode_dim": self.config.mode_dim,
                "excitation_cap": space.excitation_cap,
                "dim": space.dim,
            },
            "integrator": {
                "method": spec.method.value,
                "rel_tol": spec.tolerance,
                "abs_tol": spec.abs_tol,
                "frame_frequency": spec.frame_frequency,
            },
            "t_final": self.t_final,
        }
        if self.trajectory is not None:
            data["integrator"]["resolved_method"] = self.trajectory.method.value
            data["norm_drift"] = self.trajectory.norm_drift
        data["convergence"] = None if self.convergence is None else self.convergence.as_record()
        return data

