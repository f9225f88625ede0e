"""Modulation functions: strictly positive unit-integral curves that rescale
residuals so band width can adapt along the domain.

Multiplying a modulation function by any positive constant yields the same
prediction band, so each equivalence class is represented by its unit-integral
member; :func:`normalize` produces that canonical representative.  Residual
envelopes that vanish somewhere are made strictly positive by adding a small
constant (1e-6 times the envelope maximum) before normalizing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from funcbands.exceptions import DegenerateStatisticsError
from funcbands.grids import (
    Curve,
    FunctionalSample,
    Grid,
    check_same_grid,
    integrate,
    std_curve,
)
from funcbands.orderstats import ceil_int, kth_smallest

UNIT_INTEGRAL_RTOL = 1e-9

# Relative size of the positivity adjustment applied to envelopes with zeros.
POSITIVITY_EPS = 1e-6

KINDS = ("constant", "std_dev", "envelope", "calibration_envelope", "custom")


@dataclass(frozen=True, eq=False)
class ModulationCurve:
    """A strictly positive curve with unit integral, tagged with its origin.

    The ``kind`` tag records how the curve was built ("constant", "std_dev",
    "envelope", "calibration_envelope" or "custom") so that reports can
    attribute results without re-deriving provenance.
    """

    curve: Curve
    kind: str = "custom"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown modulation kind {self.kind!r}; expected one of {KINDS}")
        if np.any(self.curve.values <= 0):
            raise ValueError("modulation values must be strictly positive everywhere")
        total = integrate(self.curve)
        if abs(total - 1.0) > UNIT_INTEGRAL_RTOL:
            raise ValueError(
                f"modulation must integrate to 1 (within {UNIT_INTEGRAL_RTOL}), got {total!r}; "
                "use normalize() to build the canonical representative"
            )

    @property
    def grid(self) -> Grid:
        return self.curve.grid

    @property
    def values(self) -> np.ndarray:
        return self.curve.values


@dataclass(frozen=True)
class TrimmedIndexSet:
    """Calibration positions kept after trimming the most extreme curves.

    ``kept`` holds positions (0-based, within the calibration sample) whose
    supremum residual is at most ``threshold``, the ``quantile_index``-th
    smallest supremum score (1-based).  Under ties at the threshold every
    tied position is kept, so ``len(kept)`` may exceed ``quantile_index``.
    """

    kept: tuple[int, ...]
    threshold: float
    quantile_index: int

    def __post_init__(self):
        if len(self.kept) < 1:
            raise ValueError("trimmed index set cannot be empty")
        if self.quantile_index < 1:
            raise ValueError("quantile index must be >= 1")


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    return alpha


def normalize(curve: Curve, kind: str = "custom") -> ModulationCurve:
    """Divide a strictly positive curve by its integral.

    Returns the canonical unit-integral representative of the curve's
    equivalence class; ``normalize(lam * x)`` equals ``normalize(x)`` for any
    positive ``lam``.
    """
    if np.any(curve.values <= 0):
        raise ValueError("normalize requires strictly positive values everywhere")
    total = integrate(curve)
    return ModulationCurve(Curve(curve.grid, curve.values / total), kind)


def adjust_positive(curve: Curve, epsilon: float) -> Curve:
    """Shift a nonnegative curve by epsilon so it becomes strictly positive.

    The caller is expected to renormalize afterwards.  An identically zero
    input has no meaningful adjustment and raises
    :class:`~funcbands.exceptions.DegenerateStatisticsError`.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if np.any(curve.values < 0):
        raise ValueError("adjust_positive expects a nonnegative curve")
    if np.max(curve.values) == 0.0:
        raise DegenerateStatisticsError(
            "residual envelope is identically zero: every kept curve coincides "
            "with the point predictor"
        )
    return Curve(curve.grid, curve.values + epsilon)


def _envelope_to_modulation(envelope: np.ndarray, grid: Grid, kind: str) -> ModulationCurve:
    """Positivity-adjust (if needed) and normalize a nonnegative envelope."""
    curve = Curve(grid, envelope)
    peak = float(np.max(envelope))
    if peak == 0.0:
        raise DegenerateStatisticsError(
            "residual envelope is identically zero: every kept curve coincides "
            "with the point predictor"
        )
    if np.min(envelope) <= 0.0:
        curve = adjust_positive(curve, POSITIVITY_EPS * peak)
    return normalize(curve, kind)


def constant_modulation(grid: Grid) -> ModulationCurve:
    """The flat modulation 1 / (b - a): no reweighting along the domain."""
    return ModulationCurve(
        Curve(grid, np.full(grid.p, 1.0 / grid.length)), "constant"
    )


def std_dev_modulation(training: FunctionalSample) -> ModulationCurve:
    """Normalized pointwise standard deviation of the training curves."""
    return _envelope_to_modulation(
        std_curve(training).values, training.grid, "std_dev"
    )


def envelope_modulation(
    training: FunctionalSample, center: Curve, alpha: float
) -> ModulationCurve:
    """Trimmed max-envelope modulation built from the training set.

    The training curves are ranked by their supremum distance to ``center``;
    curves above the ``ceil((m + 1) * (1 - alpha))``-th smallest score are
    discarded (when that position exceeds m, every curve is kept).  The
    modulation is the normalized pointwise maximum of |y - center| over the
    kept curves.
    """
    alpha = _check_alpha(alpha)
    check_same_grid(training.grid, center.grid)
    resid = np.abs(training.values - center.values)
    m = training.n
    position = ceil_int((m + 1) * (1.0 - alpha))
    if position > m:
        keep = np.ones(m, dtype=bool)
    else:
        gamma = kth_smallest(resid.max(axis=1), position)
        keep = resid.max(axis=1) <= gamma
    envelope = resid[keep].max(axis=0)
    return _envelope_to_modulation(envelope, training.grid, "envelope")


def calibration_envelope_modulation(
    calibration: FunctionalSample, center: Curve, alpha: float
) -> tuple[ModulationCurve, TrimmedIndexSet]:
    """Trimmed max-envelope built from the calibration set.

    This is the calibration-side analogue of :func:`envelope_modulation`:
    it is the analysis object of the efficiency results, not a usable
    modulation for prediction (its dependence on the calibration set breaks
    exchangeability of the scores).  Requires ``alpha >= 1 / (l + 1)`` so
    the trimming threshold exists.

    Returns the modulation together with the :class:`TrimmedIndexSet`
    recording which calibration positions were kept.
    """
    alpha = _check_alpha(alpha)
    check_same_grid(calibration.grid, center.grid)
    resid = np.abs(calibration.values - center.values)
    l = calibration.n
    position = ceil_int((l + 1) * (1.0 - alpha))
    if position > l:
        raise DegenerateStatisticsError(
            f"alpha={alpha} is below 1/(l+1)={1.0 / (l + 1)}: no calibration "
            "quantile exists at this level"
        )
    sups = resid.max(axis=1)
    threshold = kth_smallest(sups, position)
    keep = sups <= threshold
    envelope = resid[keep].max(axis=0)
    modulation = _envelope_to_modulation(
        envelope, calibration.grid, "calibration_envelope"
    )
    kept = TrimmedIndexSet(
        kept=tuple(int(i) for i in np.flatnonzero(keep)),
        threshold=float(threshold),
        quantile_index=position,
    )
    return modulation, kept
