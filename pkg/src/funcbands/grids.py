"""Grid-sampled curves and the elementary analysis operations.

A :class:`Grid` is a uniform discretization of a closed interval [a, b],
a :class:`Curve` holds one function's values on a grid, and a
:class:`FunctionalSample` stacks n curves sharing one grid into an (n, p)
matrix.  All three are immutable after construction, so they can be shared
freely between fitted objects and across threads.

Suprema over the domain are realized as maxima over the grid points, and
integrals as the composite trapezoidal rule on the uniform spacing (exact
for constant and linear curves).  Curves from different grids never mix:
operations raise :class:`~funcbands.exceptions.GridMismatchError` instead
of resampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from funcbands.exceptions import DegenerateStatisticsError, GridMismatchError


def _readonly(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform discretization of [a, b] with p points, endpoints included."""

    a: float
    b: float
    p: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("grid endpoints must be finite")
        if not self.a < self.b:
            raise ValueError(f"degenerate domain: need a < b, got a={self.a}, b={self.b}")
        if int(self.p) != self.p or self.p < 2:
            raise ValueError(f"grid needs an integer number of points p >= 2, got p={self.p}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "points", _readonly(np.linspace(self.a, self.b, self.p)))

    @property
    def length(self) -> float:
        """Domain length b - a."""
        return self.b - self.a

    @property
    def spacing(self) -> float:
        """Distance between consecutive grid points."""
        return (self.b - self.a) / (self.p - 1)


def make_uniform_grid(a: float, b: float, p: int) -> Grid:
    """Build the uniform grid on [a, b] with p points including endpoints."""
    return Grid(float(a), float(b), int(p))


@dataclass(frozen=True, eq=False)
class Curve:
    """One function's finite values on a shared grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(self.values)
        if values.ndim != 1 or values.shape[0] != self.grid.p:
            raise ValueError(
                f"curve needs {self.grid.p} values to match its grid, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("curve values must be finite")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """Ordered collection of curves on one grid, stored as an (n, p) matrix."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(self.values)
        if values.ndim != 2 or values.shape[1] != self.grid.p:
            raise ValueError(
                f"sample needs shape (n, {self.grid.p}) to match its grid, got {values.shape}"
            )
        if values.shape[0] < 1:
            raise DegenerateStatisticsError("sample must contain at least one curve")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n

    def curve(self, i: int) -> Curve:
        """The i-th member as a Curve."""
        return Curve(self.grid, self.values[i])

    def curves(self) -> list[Curve]:
        return [self.curve(i) for i in range(self.n)]

    def subset(self, indices: Iterable[int]) -> "FunctionalSample":
        """Sub-sample of the given row indices, in the given order."""
        idx = np.asarray(list(indices), dtype=int)
        return FunctionalSample(self.grid, self.values[idx])

    @classmethod
    def from_curves(cls, curves: Sequence[Curve]) -> "FunctionalSample":
        if not curves:
            raise DegenerateStatisticsError("sample must contain at least one curve")
        grid = curves[0].grid
        for c in curves[1:]:
            check_same_grid(grid, c.grid)
        return cls(grid, np.stack([c.values for c in curves]))


def check_same_grid(first: Grid, second: Grid) -> None:
    """Raise GridMismatchError unless the two grids are identical."""
    if first != second:
        raise GridMismatchError(
            f"grids differ: [{first.a}, {first.b}] with {first.p} points vs "
            f"[{second.a}, {second.b}] with {second.p} points"
        )


def sup_abs_diff(x: Curve, y: Curve) -> float:
    """Supremum distance between two curves, i.e. the max over grid points of |x - y|."""
    check_same_grid(x.grid, y.grid)
    return float(np.max(np.abs(x.values - y.values)))


def trapezoid(values: np.ndarray, spacing: float) -> float:
    """Composite trapezoidal rule on uniformly spaced samples."""
    values = np.asarray(values, dtype=float)
    return float(spacing * (values.sum() - 0.5 * (values[0] + values[-1])))


def integrate(x: Curve) -> float:
    """Trapezoidal approximation of the integral of the curve over its domain."""
    return trapezoid(x.values, x.grid.spacing)


def mean_curve(sample: FunctionalSample) -> Curve:
    """Pointwise arithmetic mean of the sample."""
    return Curve(sample.grid, sample.values.mean(axis=0))


def std_curve(sample: FunctionalSample) -> Curve:
    """Pointwise sample standard deviation (divisor n - 1)."""
    if sample.n < 2:
        raise DegenerateStatisticsError(
            f"standard deviation needs at least 2 curves, got {sample.n}"
        )
    return Curve(sample.grid, sample.values.std(axis=0, ddof=1))
