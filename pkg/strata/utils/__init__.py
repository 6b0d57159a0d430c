"""Utility functions for strata."""

from strata.utils.matrix_io import read_matrix_csv, read_vector_csv, write_matrix_csv
from strata.utils.numeric import as_fraction, log_binomial, log_binomial_table

__all__ = [
    "as_fraction",
    "log_binomial",
    "log_binomial_table",
    "read_matrix_csv",
    "read_vector_csv",
    "write_matrix_csv",
]
