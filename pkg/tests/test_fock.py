from __future__ import annotations

import math
from typing import List

import numpy as np
import pytest
from hypothesis import given, strategies

from optoarray.fock import (
    annihilation,
    creation,
    DimensionError,
    make_space,
    number_operator,
    partial_trace,
    QuantumState,
    total_number_operator,
    TruncationError,
    TruncationWarning,
)


@pytest.mark.parametrize(
    "mode_dims, cap, expected",
    [([3], None, 3), ([3] * 8, 2, 45), ([2, 2], None, 4), ([4] * 8, 4, 487)],
)
def test_make_space_dim(mode_dims: List[int], cap: int, expected: int) -> None:
    assert make_space(mode_dims, cap).dim == expected


def test_make_space_basis_order() -> None:
    assert make_space([3]).basis == ((0,), (1,), (2,))
    assert make_space([2, 2]).basis == ((0, 0), (0, 1), (1, 0), (1, 1))


@pytest.mark.parametrize("mode_dims, cap", [([], None), ([1, 3], None), ([2], -1)])
def test_make_space_errors(mode_dims: List[int], cap: int) -> None:
    with pytest.raises(TruncationError):
        make_space(mode_dims, cap)


def test_make_space_cap_zero_warns() -> None:
    with pytest.warns(TruncationWarning):
        space = make_space([3, 3], 0)
    assert space.basis == ((0, 0),)


@given(
    strategies.lists(strategies.integers(min_value=2, max_value=4), min_size=1, max_size=4),
    strategies.one_of(strategies.none(), strategies.integers(min_value=1, max_value=5)),
)
def test_basis_bijection(mode_dims: List[int], cap: int) -> None:
    space = make_space(mode_dims, cap)
    assert len(space.index_of) == space.dim
    for index, occupation in enumerate(space.basis):
        assert space.index_of[occupation] == index
        assert all(0 <= n < dim for n, dim in zip(occupation, mode_dims))
        if cap is not None:
            assert sum(occupation) <= cap
    assert list(space.basis) == sorted(space.basis)


def test_annihilation_ladder() -> None:
    space = make_space([3])
    lowering = annihilation(space, 0).to_dense()
    expected = math.sqrt(2) * space.basis_vector((1,))
    assert np.allclose(lowering @ space.basis_vector((2,)), expected)
    assert np.allclose(lowering @ space.basis_vector((0,)), 0.0)
    assert annihilation(space, 0).max_abs() == pytest.approx(math.sqrt(2))
    with pytest.warns(TruncationWarning):
        vacuum_only = make_space([2], 0)
    assert annihilation(vacuum_only, 0).max_abs() == 0.0


def test_number_operator_eigenvalues() -> None:
    space = make_space([3, 2], 2)
    number = (creation(space, 0) @ annihilation(space, 0)).to_dense()
    for index, occupation in enumerate(space.basis):
        assert number[index, index] == occupation[0]
    assert np.allclose(number, number_operator(space, 0).to_dense())


def test_truncated_commutator() -> None:
    dim = 5
    space = make_space([dim])
    lowering = annihilation(space, 0)
    commutator = lowering.commutator(lowering.dag()).to_dense()
    expected = np.eye(dim)
    expected[-1, -1] = 1 - dim
    assert np.allclose(commutator, expected, atol=1e-14)


def test_creation_is_adjoint() -> None:
    space = make_space([3, 3, 2], 3)
    for mode in range(3):
        difference = creation(space, mode).matrix - annihilation(space, mode).matrix.conj().T
        assert difference.count_nonzero() == 0


def test_annihilation_invalid_mode() -> None:
    with pytest.raises(TruncationError):
        annihilation(make_space([2, 2]), 2)


def test_capped_operators_project() -> None:
    space = make_space([3, 3], 1)
    raising = creation(space, 0).to_dense()
    # |1,0> would go to |2,0>, which the cap excludes
    assert np.allclose(raising @ space.basis_vector((1, 0)), 0.0)
    assert total_number_operator(space).is_hermitian()


def test_state_validation() -> None:
    space = make_space([2])
    with pytest.raises(TruncationError):
        QuantumState.pure(space, np.array([1.0, 1.0]))
    with pytest.raises(TruncationError):
        QuantumState.mixed(space, np.array([[0.5, 0.1j], [0.1j, 0.5]]))
    with pytest.raises(DimensionError):
        QuantumState(space, np.ones(3))


def test_partial_trace_product() -> None:
    space = make_space([2, 2])
    state = QuantumState.pure(space, space.basis_vector((1, 0)))
    reduced = partial_trace(state, [0])
    assert np.allclose(reduced.data, np.diag([0.0, 1.0]), atol=1e-12)


def test_partial_trace_entangled() -> None:
    space = make_space([2, 2])
    vector = (space.basis_vector((0, 1)) + space.basis_vector((1, 0))) / math.sqrt(2)
    reduced = partial_trace(QuantumState.pure(space, vector), [0])
    assert np.allclose(reduced.data, np.diag([0.5, 0.5]), atol=1e-12)
    assert reduced.purity() == pytest.approx(0.5)
    assert QuantumState.pure(space, vector).purity() == pytest.approx(1.0)


def test_partial_trace_keep_all() -> None:
    space = make_space([3, 2], 2)
    rng = np.random.default_rng(7)
    vector = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    state = QuantumState.pure(space, vector / np.linalg.norm(vector))
    reduced = partial_trace(state, [0, 1])
    assert np.allclose(reduced.data, state.density_matrix(), atol=1e-12)


def test_partial_trace_capped_mixed() -> None:
    space = make_space([3, 3, 3], 2)
    rng = np.random.default_rng(11)
    shape = (space.dim, space.dim)
    matrix = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    rho = matrix @ matrix.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    state = QuantumState.mixed(space, rho / np.trace(rho).real)
    reduced = partial_trace(state, [2, 0])
    assert reduced.space == make_space([3, 3], 2)
    assert abs(reduced.trace() - 1.0) < 1e-12
    assert np.allclose(reduced.data, reduced.data.conj().T, atol=1e-12)


@pytest.mark.parametrize("keep", [[], [0, 0], [3]])
def test_partial_trace_errors(keep: List[int]) -> None:
    space = make_space([2, 2])
    state = QuantumState.pure(space, space.basis_vector((0, 0)))
    with pytest.raises(TruncationError):
        partial_trace(state, keep)
