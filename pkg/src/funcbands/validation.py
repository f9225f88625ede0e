"""Input validation helpers for array-facing entry points."""

from __future__ import annotations

import numpy as np

from funcbands.exceptions import CurveFormatError
from funcbands.grids import Grid, make_uniform_grid


def check_curve_matrix(X, n_points: int | None = None) -> np.ndarray:
    """Coerce X to a finite float matrix of shape (n_curves, n_points)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array of curves, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 2:
        raise ValueError(f"expected at least 1 curve with at least 2 points, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("curve values must be finite")
    if n_points is not None and X.shape[1] != n_points:
        raise ValueError(
            f"curves have {X.shape[1]} points but the fitted grid has {n_points}"
        )
    return X


def resolve_grid(grid, n_points: int) -> Grid:
    """Build the shared grid from the accepted specifications.

    ``grid`` may be None (unit interval), a Grid, an ``(a, b)`` pair, or the
    full vector of uniformly spaced points.
    """
    if grid is None:
        return make_uniform_grid(0.0, 1.0, n_points)
    if isinstance(grid, Grid):
        if grid.p != n_points:
            raise ValueError(f"grid has {grid.p} points but the curves have {n_points}")
        return grid
    candidate = np.asarray(grid, dtype=float)
    if candidate.ndim == 1 and candidate.size == 2:
        return make_uniform_grid(candidate[0], candidate[1], n_points)
    if candidate.ndim == 1 and candidate.size == n_points:
        from funcbands.io import _grid_from_points

        try:
            return _grid_from_points(candidate, "grid argument")
        except CurveFormatError as exc:
            raise ValueError(str(exc)) from None
    raise ValueError(
        "grid must be None, a Grid, an (a, b) pair, or the full vector of grid points"
    )
