"""Order-statistic helpers.

The quantile positions used throughout the package are expressions like
``ceil((l + 1) * (1 - alpha))`` whose argument is mathematically an integer
for many (l, alpha) pairs but lands a few ulps off in floating point
(e.g. ``100 * (1 - 0.1)`` evaluates above 90).  ``ceil_int``/``floor_int``
absorb representation error up to 1e-12 so those cases round to the exact
integer instead of being pushed off by one.
"""

from __future__ import annotations

import math

import numpy as np

_NUDGE = 1e-12


def floor_int(x: float) -> int:
    """floor(x), robust to x sitting a hair below an exact integer."""
    return math.floor(x + _NUDGE)


def ceil_int(x: float) -> int:
    """ceil(x), robust to x sitting a hair above an exact integer."""
    return math.ceil(x - _NUDGE)


def kth_smallest(values: np.ndarray, k: int) -> float:
    """k-th smallest element (1-based) of a one-dimensional array."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("kth_smallest expects a one-dimensional array")
    if not 1 <= k <= values.shape[0]:
        raise ValueError(f"k={k} out of range for {values.shape[0]} values")
    return float(np.partition(values, k - 1)[k - 1])
