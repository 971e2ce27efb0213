from __future__ import annotations

from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple, TypedDict, Union

Occupation = Tuple[int, ...]

Amplitudes = Mapping[Tuple[int, int], complex]

# "phi_plus", "Phi_plus", a single occupation (na, nb) or explicit amplitudes.
TwoModeSpec = Union[str, Tuple[int, int], Amplitudes]

SweepAxis = Literal["G_over_J", "kappa_over_J"]

Scheme = Literal["pst", "eigenmode", "tunneling"]


class CompatibilityReport(TypedDict):
    ok: bool
    ratio: float


class RWAReport(TypedDict):
    ok: bool
    lhs: float
    rhs: float
    ratio: float
    margin: float


class StabilityReport(TypedDict):
    ok: bool
    cells: List[bool]
    bound: List[float]


class ThresholdReport(TypedDict):
    ok: bool
    max_hop: float
    max_decay: float


class CheckReport(TypedDict):
    ok: bool
    stability: StabilityReport
    rwa: Optional[RWAReport]
    time_compatibility: Optional[CompatibilityReport]
    coherent_threshold: Optional[ThresholdReport]
    warnings: List[str]


class SampleRow(TypedDict, total=False):
    time_s: float
    raw_fidelity: float
    corrected_fidelity: float
    max_phase_fidelity: float
    trace: float
    total_excitation: float
    min_eigenvalue: float


class ConvergenceRecord(TypedDict):
    converged: bool
    converged_at: Optional[int]
    caps: List[int]
    values: List[float]
    deltas: List[float]
    tol: float


class SweepRow(TypedDict, total=False):
    axis: str
    value: float
    state: str
    n_m: float
    tau: float
    raw_fidelity: float
    corrected_fidelity: float
    max_phase_fidelity: float
    trace: float
    wall_time: float
    error: Optional[str]
    convergence: Optional[ConvergenceRecord]


class BidirectionalRow(TypedDict):
    time_s: float
    receiver_raw_fidelity: float
    receiver_corrected_fidelity: float
    sender_raw_fidelity: float
    sender_corrected_fidelity: float
    trace: float


Metadata = Dict[str, Any]
