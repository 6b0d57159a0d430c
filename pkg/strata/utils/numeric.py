"""Log-domain combinatorics and exact-arithmetic helpers."""

from decimal import Decimal
from fractions import Fraction

import numpy as np
from cachetools import LRUCache, cached
from scipy.special import gammaln


def log_binomial(n, k):
    """log C(n, k) via log-gamma; -inf outside 0 <= k <= n. Works elementwise on arrays."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    valid = (k >= 0) & (k <= n)
    with np.errstate(invalid="ignore"):
        value = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    result = np.where(valid, value, -np.inf)
    return float(result) if result.ndim == 0 else result


@cached(LRUCache(maxsize=64))
def log_binomial_table(n: int) -> np.ndarray:
    """(n+1) x (n+1) table of log C(m, v); -inf above the diagonal. Read-only."""
    m = np.arange(n + 1)[:, None]
    v = np.arange(n + 1)[None, :]
    table = log_binomial(m, v)
    table.setflags(write=False)
    return table


def as_fraction(value: Fraction | Decimal | int | float | str) -> Fraction:
    """Exact rational from user input; floats go through their shortest repr (0.1 -> 1/10)."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)
