"""Truncated multimode bosonic Fock spaces.

Basis vectors are occupation tuples enumerated lexicographically, so that
``(0, ..., 0)`` is always index 0 and the ordering is identical across runs.
An optional global excitation cap removes every occupation vector whose total
exceeds the cap; ladder operators acting out of the admissible set are
projected away rather than renormalised.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .typing import Occupation
from .utils import is_hermitian, OptoArrayError

STATE_ATOL = 1e-10
HERMITIAN_ATOL = 1e-12


class TruncationError(OptoArrayError, ValueError):
    pass


class DimensionError(OptoArrayError, ValueError):
    def __init__(self, expected: int, actual: int) -> None:
        super().__init__(f"Dimension mismatch, wanted {expected} got {actual}")


class TruncationWarning(UserWarning):
    pass


def _occupations(
    mode_dims: Sequence[int], cap: Optional[int], prefix: Tuple[int, ...] = ()
) -> Iterator[Occupation]:
    if len(prefix) == len(mode_dims):
        yield prefix
        return
    used = sum(prefix)
    limit = mode_dims[len(prefix)] - 1
    if cap is not None:
        limit = min(limit, cap - used)
    for n in range(limit + 1):
        yield from _occupations(mode_dims, cap, prefix + (n,))


@dataclass(frozen=True)
class HilbertSpace:
    mode_dims: Tuple[int, ...]
    excitation_cap: Optional[int] = None
    basis: Tuple[Occupation, ...] = field(init=False, repr=False, compare=False)
    index_of: Dict[Occupation, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        basis = tuple(_occupations(self.mode_dims, self.excitation_cap))
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "index_of", {occ: idx for idx, occ in enumerate(basis)})

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def num_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def occupations(self) -> np.ndarray:
        """The basis as a ``(dim, num_modes)`` integer array."""
        return np.array(self.basis, dtype=np.int64).reshape(self.dim, self.num_modes)

    def admits(self, occupation: Occupation) -> bool:
        return occupation in self.index_of

    def basis_vector(self, occupation: Occupation) -> np.ndarray:
        try:
            index = self.index_of[tuple(occupation)]
        except KeyError:
            raise TruncationError(f"Occupation {tuple(occupation)} is outside {self!r}")
        vector = np.zeros(self.dim, dtype=complex)
        vector[index] = 1.0
        return vector


def make_space(mode_dims: Sequence[int], excitation_cap: Optional[int] = None) -> HilbertSpace:
    if len(mode_dims) == 0:
        raise TruncationError("A Hilbert space needs at least one mode")
    if any(int(dim) < 2 for dim in mode_dims):
        raise TruncationError(f"Every mode needs at least two levels, got {list(mode_dims)}")
    if excitation_cap is not None:
        if excitation_cap < 0:
            raise TruncationError(f"The excitation cap must be non-negative, got {excitation_cap}")
        if excitation_cap == 0:
            warnings.warn(
                "Excitation cap 0 leaves only the vacuum, no dynamics is possible",
                TruncationWarning,
            )
    return HilbertSpace(tuple(int(dim) for dim in mode_dims), excitation_cap)


@dataclass(frozen=True)
class SparseOperator:
    space: HilbertSpace
    matrix: sparse.csr_matrix

    def __post_init__(self) -> None:
        if self.matrix.shape != (self.space.dim, self.space.dim):
            raise DimensionError(self.space.dim, self.matrix.shape[0])
        object.__setattr__(self, "matrix", sparse.csr_matrix(self.matrix, dtype=complex))

    def dag(self) -> SparseOperator:
        return SparseOperator(self.space, self.matrix.conj().T.tocsr())

    def is_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        return is_hermitian(self.matrix, atol)

    def commutator(self, other: SparseOperator) -> SparseOperator:
        return self @ other - other @ self

    def max_abs(self) -> float:
        """Largest absolute matrix element."""
        data = self.matrix.data
        return float(np.max(np.abs(data))) if data.size else 0.0

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def _check_space(self, other: SparseOperator) -> None:
        if other.space != self.space:
            raise DimensionError(self.space.dim, other.space.dim)

    def __add__(self, other: SparseOperator) -> SparseOperator:
        self._check_space(other)
        return SparseOperator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: SparseOperator) -> SparseOperator:
        self._check_space(other)
        return SparseOperator(self.space, self.matrix - other.matrix)

    def __matmul__(self, other: SparseOperator) -> SparseOperator:
        self._check_space(other)
        return SparseOperator(self.space, self.matrix @ other.matrix)

    def __mul__(self, scalar: complex) -> SparseOperator:
        return SparseOperator(self.space, self.matrix * scalar)

    __rmul__ = __mul__


def zero_operator(space: HilbertSpace) -> SparseOperator:
    return SparseOperator(space, sparse.csr_matrix((space.dim, space.dim), dtype=complex))


def identity(space: HilbertSpace) -> SparseOperator:
    return SparseOperator(space, sparse.identity(space.dim, dtype=complex, format="csr"))


def _check_mode(space: HilbertSpace, mode: int) -> None:
    if not 0 <= mode < space.num_modes:
        raise TruncationError(f"Mode {mode} out of range for {space.num_modes} modes")


def annihilation(space: HilbertSpace, mode: int) -> SparseOperator:
    _check_mode(space, mode)
    rows: List[int] = []
    cols: List[int] = []
    data: List[float] = []
    for col, occupation in enumerate(space.basis):
        n = occupation[mode]
        if n == 0:
            continue
        lowered = occupation[:mode] + (n - 1,) + occupation[mode + 1 :]
        rows.append(space.index_of[lowered])
        cols.append(col)
        data.append(np.sqrt(n))
    matrix = sparse.csr_matrix((data, (rows, cols)), shape=(space.dim, space.dim), dtype=complex)
    return SparseOperator(space, matrix)


def creation(space: HilbertSpace, mode: int) -> SparseOperator:
    return annihilation(space, mode).dag()


def number_operator(space: HilbertSpace, mode: int) -> SparseOperator:
    _check_mode(space, mode)
    occupations = space.occupations[:, mode].astype(complex)
    return SparseOperator(space, sparse.diags(occupations, format="csr"))


def total_number_operator(space: HilbertSpace) -> SparseOperator:
    totals = space.occupations.sum(axis=1).astype(complex)
    return SparseOperator(space, sparse.diags(totals, format="csr"))


class QuantumState:
    """A pure state vector or a density matrix over a :class:`HilbertSpace`.

    The constructor does not validate, it is used for propagated states whose
    drift is reported separately. Use :meth:`pure` and :meth:`mixed` to build
    validated states.
    """

    def __init__(self, space: HilbertSpace, data: np.ndarray) -> None:
        data = np.asarray(data, dtype=complex)
        if data.ndim == 1 and data.shape != (space.dim,):
            raise DimensionError(space.dim, data.shape[0])
        if data.ndim == 2 and data.shape != (space.dim, space.dim):
            raise DimensionError(space.dim, data.shape[0])
        if data.ndim not in {1, 2}:
            raise DimensionError(space.dim, data.size)
        self.space = space
        self.data = data

    @classmethod
    def pure(
        cls, space: HilbertSpace, vector: np.ndarray, atol: float = STATE_ATOL
    ) -> QuantumState:
        state = cls(space, np.asarray(vector).reshape(-1))
        norm = float(np.vdot(state.data, state.data).real)
        if abs(norm - 1.0) > atol:
            raise TruncationError(f"State is not normalised, |psi|^2 = {norm!r}")
        return state

    @classmethod
    def mixed(
        cls, space: HilbertSpace, matrix: np.ndarray, atol: float = STATE_ATOL
    ) -> QuantumState:
        state = cls(space, np.asarray(matrix))
        if state.data.ndim != 2:
            raise DimensionError(space.dim, state.data.size)
        if abs(state.trace() - 1.0) > atol:
            raise TruncationError(f"Density matrix trace is {state.trace()!r}")
        if not is_hermitian(state.data, HERMITIAN_ATOL):
            raise TruncationError("Density matrix is not Hermitian")
        return state

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_mixed(self) -> QuantumState:
        return QuantumState(self.space, self.density_matrix())

    def trace(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real)
        return float(np.trace(self.data).real)

    def probabilities(self) -> np.ndarray:
        if self.is_pure:
            return np.abs(self.data) ** 2
        return np.real(np.diag(self.data))

    def expect(self, operator: SparseOperator) -> complex:
        if operator.space != self.space:
            raise DimensionError(self.space.dim, operator.space.dim)
        if self.is_pure:
            return complex(np.vdot(self.data, operator.matrix @ self.data))
        return complex(np.sum((operator.matrix @ self.data).diagonal()))

    def mode_populations(self) -> np.ndarray:
        """Mean occupation of every mode, valid because the basis is the Fock basis."""
        return self.probabilities() @ self.space.occupations

    def min_eigenvalue(self) -> float:
        if self.is_pure:
            return 0.0 if self.space.dim > 1 else self.trace()
        hermitian = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(hermitian)[0])

    def purity(self) -> float:
        rho = self.density_matrix()
        return float(np.real(np.vdot(rho, rho)))


def partial_trace(state: QuantumState, keep_modes: Sequence[int]) -> QuantumState:
    space = state.space
    keep = [int(mode) for mode in keep_modes]
    if len(keep) == 0:
        raise TruncationError("At least one mode must be kept")
    if len(set(keep)) != len(keep):
        raise TruncationError(f"Duplicate modes in {keep}")
    for mode in keep:
        _check_mode(space, mode)
    traced = [mode for mode in range(space.num_modes) if mode not in keep]

    reduced_space = make_space([space.mode_dims[mode] for mode in keep], space.excitation_cap)
    occupations = space.occupations
    kept_index = np.array(
        [reduced_space.index_of[tuple(row)] for row in occupations[:, keep]], dtype=np.int64
    )

    groups: Dict[Occupation, List[int]] = {}
    for index, row in enumerate(occupations[:, traced]):
        groups.setdefault(tuple(row), []).append(index)

    reduced = np.zeros((reduced_space.dim, reduced_space.dim), dtype=complex)
    for indices in groups.values():
        full = np.array(indices, dtype=np.int64)
        sub = kept_index[full]
        if state.is_pure:
            amplitudes = state.data[full]
            block = np.outer(amplitudes, amplitudes.conj())
        else:
            block = state.data[np.ix_(full, full)]
        reduced[np.ix_(sub, sub)] += block
    reduced = 0.5 * (reduced + reduced.conj().T)
    return QuantumState(reduced_space, reduced)
