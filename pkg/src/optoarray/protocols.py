from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from .typing import CompatibilityReport, Scheme
from .utils import close_to_odd_integer, OptoArrayError

NOMINAL_CHAIN_RATIO = 1.0 / math.sqrt(2.0)
DEFAULT_MARGIN = 10.0
DEFAULT_TIME_RTOL = 1e-6
MARGIN_SLACK = 1e-9


class ProtocolError(OptoArrayError, ValueError):
    pass


class MarginWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TransferPlan:
    """Hopping profile and transfer times of the two polariton chains.

    ``chain_phase`` is the phase per excitation acquired by the mirror map
    of the chain at ``tau_A``, zero where no closed form is known.
    """

    scheme: Scheme
    hops: Tuple[float, ...]
    tau_A: float
    tau_B: float
    scheme_params: Dict[str, float] = field(default_factory=dict)
    compatible: bool = True
    compatibility_ratio: float = 1.0
    warnings: Tuple[str, ...] = ()
    endpoint_detuning: float = 0.0
    chain_phase: float = 0.0
    peak_hop: float = 0.0
    quoted_peak_hop: Optional[float] = None

    @property
    def tau(self) -> float:
        return self.tau_A


def check_time_compatibility(
    tau_A: float, tau_B: float, tol: float = DEFAULT_TIME_RTOL
) -> CompatibilityReport:
    if not (tau_A > 0 and tau_B > 0):
        raise ProtocolError(f"Transfer times must be positive, got {tau_A!r} and {tau_B!r}")
    ratio = max(tau_A, tau_B) / min(tau_A, tau_B)
    return {"ok": close_to_odd_integer(ratio, tol), "ratio": ratio}


def _ratios(chain_ratio_a: float, chain_ratio_b: Optional[float]) -> Tuple[float, float]:
    ratio_b = chain_ratio_a if chain_ratio_b is None else chain_ratio_b
    if not (chain_ratio_a > 0 and ratio_b > 0):
        raise ProtocolError(f"Chain ratios must be positive, got {chain_ratio_a!r}, {ratio_b!r}")
    return chain_ratio_a, ratio_b


def _plan(
    scheme: Scheme,
    hops: Tuple[float, ...],
    tau_A: float,
    tau_B: float,
    scheme_params: Dict[str, float],
    issues: Tuple[str, ...] = (),
    **kwargs: Any,
) -> TransferPlan:
    for issue in issues:
        warnings.warn(issue, MarginWarning)
    compatibility = check_time_compatibility(tau_A, tau_B)
    return TransferPlan(
        scheme=scheme,
        hops=hops,
        tau_A=tau_A,
        tau_B=tau_B,
        scheme_params=scheme_params,
        compatible=compatibility["ok"],
        compatibility_ratio=compatibility["ratio"],
        warnings=issues,
        peak_hop=max(hops),
        **kwargs,
    )


def pst_profile(
    N: int,
    J: float,
    chain_ratio_a: float = NOMINAL_CHAIN_RATIO,
    chain_ratio_b: Optional[float] = None,
) -> TransferPlan:
    """Mirror-symmetric profile ``J_n ~ sqrt(n (N - n))`` transferring at ``pi / J``.

    The hops are scaled so that the A chain, which sees ``chain_ratio_a``
    times the optical hopping, has couplings ``(J / 2) sqrt(n (N - n))``.
    """
    if N < 2:
        raise ProtocolError(f"Perfect state transfer needs at least 2 cells, got {N}")
    if not J > 0:
        raise ProtocolError(f"J must be positive, got {J!r}")
    ratio_a, ratio_b = _ratios(chain_ratio_a, chain_ratio_b)
    scale = J / (2.0 * ratio_a)
    hops = tuple(scale * math.sqrt(n * (N - n)) for n in range(1, N))
    tau_A = math.pi / J
    return _plan(
        "pst",
        hops,
        tau_A,
        tau_A * ratio_a / ratio_b,
        {"J": J, "chain_ratio_a": ratio_a, "chain_ratio_b": ratio_b},
        chain_phase=(N - 1) * math.pi / 2.0,
        quoted_peak_hop=N * J / 4.0 if N % 2 == 0 else None,
    )


def _end_weak_hops(N: int, end: float, bulk: float) -> Tuple[float, ...]:
    return tuple(end if n in {0, N - 2} else bulk for n in range(N - 1))


def eigenmode_profile(
    N: int,
    lam: float,
    J: float,
    margin: float = DEFAULT_MARGIN,
    chain_ratio_a: float = NOMINAL_CHAIN_RATIO,
    chain_ratio_b: Optional[float] = None,
) -> TransferPlan:
    """Weak end bonds transferring through the zero mode of an odd chain."""
    if N < 3 or N % 2 == 0:
        raise ProtocolError(f"Eigenmode mediated transfer needs an odd N >= 3, got {N}")
    if not (lam > 0 and J > 0):
        raise ProtocolError(f"lambda and J must be positive, got {lam!r} and {J!r}")
    ratio_a, ratio_b = _ratios(chain_ratio_a, chain_ratio_b)

    issues = []
    if lam > J / margin * (1.0 + MARGIN_SLACK):
        issues.append(f"lambda = {lam!r} is not {margin:g} times below J = {J!r}")

    base = math.pi * math.sqrt(2.0 * (N + 1)) / (math.sqrt(2.0) * lam)
    return _plan(
        "eigenmode",
        _end_weak_hops(N, lam, J),
        base / ratio_a,
        base / ratio_b,
        {"lambda": lam, "J": J, "chain_ratio_a": ratio_a, "chain_ratio_b": ratio_b},
        tuple(issues),
    )


def tunneling_profile(
    N: int,
    lam: float,
    delta: float,
    J: float,
    margin: float = DEFAULT_MARGIN,
    chain_ratio_a: float = NOMINAL_CHAIN_RATIO,
    chain_ratio_b: Optional[float] = None,
) -> TransferPlan:
    """Weak end bonds on detuned end cells, second-order tunnelling transfer."""
    if N < 3:
        raise ProtocolError(f"Tunnelling transfer needs at least 3 cells, got {N}")
    if not delta > 0:
        raise ProtocolError(f"The endpoint detuning must be positive, got {delta!r}")
    if not (lam > 0 and J > 0):
        raise ProtocolError(f"lambda and J must be positive, got {lam!r} and {J!r}")
    ratio_a, ratio_b = _ratios(chain_ratio_a, chain_ratio_b)

    issues = []
    if lam > delta / margin * (1.0 + MARGIN_SLACK):
        issues.append(f"lambda = {lam!r} is not {margin:g} times below delta = {delta!r}")
    if delta / margin > J / margin**2 * (1.0 + MARGIN_SLACK):
        issues.append(f"delta = {delta!r} is not {margin:g} times below J = {J!r}")

    def _tau(ratio: float) -> float:
        return N * math.pi * delta / (2.0 * (math.sqrt(2.0) * ratio * lam) ** 2)

    return _plan(
        "tunneling",
        _end_weak_hops(N, lam, J),
        _tau(ratio_a),
        _tau(ratio_b),
        {
            "lambda": lam,
            "delta": delta,
            "J": J,
            "chain_ratio_a": ratio_a,
            "chain_ratio_b": ratio_b,
        },
        tuple(issues),
        endpoint_detuning=delta,
    )
