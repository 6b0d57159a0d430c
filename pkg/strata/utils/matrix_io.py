"""Dense CSV matrix and vector I/O (row-major, comma separated)."""

import logging
from pathlib import Path

import numpy as np

from strata.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


def read_matrix_csv(path: Path) -> np.ndarray:
    """Read a dense matrix; a single line is a 1 x d matrix."""
    try:
        matrix = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except (OSError, ValueError) as e:
        raise InvalidArgumentError(f"cannot read matrix from '{path}': {e}") from e
    logger.debug(f"Read {matrix.shape[0]}x{matrix.shape[1]} matrix from {path}")
    return matrix


def read_vector_csv(path: Path) -> np.ndarray:
    """Read a vector stored as one row or one column."""
    return read_matrix_csv(path).reshape(-1)


def write_matrix_csv(path: Path, matrix: np.ndarray) -> None:
    matrix = np.atleast_2d(matrix)
    fmt = "%d" if np.issubdtype(matrix.dtype, np.integer) else "%.17g"
    np.savetxt(path, matrix, delimiter=",", fmt=fmt)
