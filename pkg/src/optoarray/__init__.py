from __future__ import annotations

from .config import Config
from .dynamics import EvolutionSpec, evolve_closed, evolve_open, propagate
from .experiment import TransferExperiment
from .fock import make_space, QuantumState
from .metrics import max_phase_fidelity, phase_correct, transfer_fidelity
from .model import ArrayConfig, build_array_hamiltonian, CellParams, ModelKind, uniform_array
from .polariton import bogoliubov_coefficients, effective_couplings, polariton_frequencies
from .protocols import eigenmode_profile, pst_profile, tunneling_profile

__all__ = (
    "ArrayConfig",
    "bogoliubov_coefficients",
    "build_array_hamiltonian",
    "CellParams",
    "Config",
    "effective_couplings",
    "eigenmode_profile",
    "evolve_closed",
    "evolve_open",
    "EvolutionSpec",
    "make_space",
    "max_phase_fidelity",
    "ModelKind",
    "phase_correct",
    "polariton_frequencies",
    "propagate",
    "pst_profile",
    "QuantumState",
    "TransferExperiment",
    "transfer_fidelity",
    "tunneling_profile",
    "uniform_array",
)
