from __future__ import annotations

import platform
import sys
from importlib.metadata import PackageNotFoundError, version
from typing import Dict

import numpy as np
import scipy
from scipy import sparse


class OptoArrayError(Exception):
    pass


def is_hermitian(matrix: sparse.spmatrix | np.ndarray, atol: float = 1e-12) -> bool:
    if sparse.issparse(matrix):
        difference = sparse.coo_matrix(matrix - matrix.conj().T)
        return difference.nnz == 0 or bool(np.max(np.abs(difference.data)) <= atol)
    else:
        return bool(np.allclose(matrix, matrix.conj().T, rtol=0.0, atol=atol))


def nearest_odd_integer(value: float) -> int:
    return 2 * int(np.floor(value / 2.0)) + 1


def close_to_odd_integer(value: float, rtol: float) -> bool:
    odd = nearest_odd_integer(value)
    return abs(value - odd) <= rtol * odd


def package_versions() -> Dict[str, str]:
    try:
        own = version("optoarray")
    except PackageNotFoundError:
        own = "unknown"
    return {
        "optoarray": own,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
        "platform": platform.platform(),
    }
