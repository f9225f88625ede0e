"""Split conformal machinery for simultaneous prediction bands.

The pipeline: split the sample into training and calibration halves, build a
point predictor and a modulation function from the training half, score each
calibration curve by its modulated supremum distance to the predictor, and
take the band radius at the appropriate order statistic of those scores.
Because the scores of exchangeable curves are exchangeable, the resulting
band has guaranteed finite-sample coverage for any predictor and any
training-based modulation.

Band membership uses closed intervals; the randomized (smoothed) variant can
produce open bands depending on its tie-breaking draw.  When alpha is below
1/(l+1) no calibration quantile exists and the band degenerates to the whole
curve space, represented by an explicit ``full_space`` flag rather than
infinite bounds.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from funcbands.exceptions import DegenerateStatisticsError, GridMismatchError
from funcbands.grids import (
    Curve,
    FunctionalSample,
    Grid,
    check_same_grid,
    mean_curve,
)
from funcbands.modulation import (
    ModulationCurve,
    _check_alpha,
    constant_modulation,
    envelope_modulation,
    std_dev_modulation,
)
from funcbands.orderstats import ceil_int, floor_int


class _FullSpace:
    """Sentinel: alpha is below 1/(l+1), the band is the whole curve space."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "FULL_SPACE"


FULL_SPACE = _FullSpace()

PredictorRule = Union[str, Curve, Callable[[FunctionalSample], Curve]]
ModulationRule = Union[
    str, ModulationCurve, Callable[[FunctionalSample, Curve, float], ModulationCurve]
]

_MODULATION_ALIASES = {
    "s0": "constant",
    "constant": "constant",
    "sigma": "std_dev",
    "std_dev": "std_dev",
    "sbar": "envelope",
    "envelope": "envelope",
}


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint training / calibration index lists covering 0..n-1."""

    training: tuple[int, ...]
    calibration: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self):
        training = tuple(int(i) for i in self.training)
        calibration = tuple(int(i) for i in self.calibration)
        object.__setattr__(self, "training", training)
        object.__setattr__(self, "calibration", calibration)
        if len(training) < 1 or len(calibration) < 1:
            raise DegenerateStatisticsError(
                "both the training and the calibration set need at least one curve"
            )
        n = len(training) + len(calibration)
        if set(training) & set(calibration):
            raise ValueError("training and calibration indices must be disjoint")
        if set(training) | set(calibration) != set(range(n)):
            raise ValueError(f"indices must partition 0..{n - 1}")

    @property
    def m(self) -> int:
        return len(self.training)

    @property
    def l(self) -> int:
        return len(self.calibration)

    @property
    def n(self) -> int:
        return self.m + self.l


@dataclass(frozen=True)
class SmoothedParams:
    """Tie-breaking draw and tie counts of a randomized (smoothed) band.

    ``tie_right`` / ``tie_left`` count the calibration scores equal to the
    selected radius that sit to its right / left in the sorted score list.
    """

    tau: float
    tie_right: int
    tie_left: int

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if self.tie_right < 0 or self.tie_left < 0:
            raise ValueError("tie counts must be nonnegative")


@dataclass(frozen=True, eq=False)
class PredictionBand:
    """A fitted prediction band: center curve plus a pointwise radius.

    ``lower``/``upper`` equal ``center -+ radius`` before clipping, where
    ``radius = radius_scale * modulation`` for conformal bands (``modulation``
    is the unit-integral profile) and a free curve for the pointwise and
    naive baselines (then ``radius_scale`` is 1 and ``modulation`` is None).
    ``closed`` selects weak or strict inequalities in membership tests;
    ``full_space`` marks the degenerate all-of-space band.
    """

    grid: Grid
    center: Curve
    radius: Curve
    lower: Curve
    upper: Curve
    kind: str
    alpha: float
    radius_scale: float = 1.0
    modulation: ModulationCurve | None = None
    closed: bool = True
    full_space: bool = False
    lower_clip: float | None = None
    calibration_scores: np.ndarray | None = None
    smoothed: SmoothedParams | None = None
    rho: float | None = None
    seed: int | None = None
    predictor: str = "mean"

    def __post_init__(self):
        for c in (self.center, self.radius, self.lower, self.upper):
            check_same_grid(self.grid, c.grid)
        if np.any(self.radius.values < 0):
            raise ValueError("band radius must be nonnegative")
        if np.any(self.lower.values > self.upper.values):
            raise ValueError("band lower bound exceeds its upper bound somewhere")
        if self.calibration_scores is not None:
            scores = np.array(self.calibration_scores, dtype=float)
            scores.flags.writeable = False
            object.__setattr__(self, "calibration_scores", scores)

    @property
    def l(self) -> int | None:
        """Calibration size, when the band stores its scores."""
        if self.calibration_scores is None:
            return None
        return int(self.calibration_scores.shape[0])


def split(n: int, rho: float, seed: int) -> SplitIndices:
    """Seeded uniformly random partition into training and calibration sets.

    The calibration size is ``l = round(n * rho)`` (halves round down, so
    an odd sample favors training) and the training size is ``m = n - l``.
    The same ``(n, rho, seed)`` always yields the same partition.
    """
    if n < 2:
        raise DegenerateStatisticsError(f"splitting needs n >= 2 curves, got {n}")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie strictly between 0 and 1, got {rho}")
    l = ceil_int(n * rho - 0.5)
    m = n - l
    if l < 1 or m < 1:
        raise DegenerateStatisticsError(
            f"degenerate split: n={n}, rho={rho} gives m={m}, l={l}"
        )
    perm = np.random.default_rng(seed).permutation(n)
    return SplitIndices(
        training=tuple(sorted(int(i) for i in perm[:m])),
        calibration=tuple(sorted(int(i) for i in perm[m:])),
        seed=int(seed),
    )


def quantile_index(l: int, alpha: float):
    """1-based position of the calibration score that sets the band radius.

    Returns ``ceil((l + 1) * (1 - alpha))`` when ``alpha >= 1/(l+1)``, and
    the :data:`FULL_SPACE` sentinel when alpha is too small for any quantile
    to exist.
    """
    if l < 1:
        raise ValueError(f"calibration size must be >= 1, got {l}")
    alpha = _check_alpha(alpha)
    position = ceil_int((l + 1) * (1.0 - alpha))
    if position > l:
        return FULL_SPACE
    return position


def nonconformity_scores(
    calibration: FunctionalSample, center: Curve, modulation: ModulationCurve
) -> np.ndarray:
    """Modulated supremum scores max_t |y_j(t) - center(t)| / modulation(t).

    Equivalently the plain supremum distance between the transformed curves
    y/modulation and center/modulation.
    """
    check_same_grid(calibration.grid, center.grid)
    check_same_grid(calibration.grid, modulation.grid)
    resid = np.abs(calibration.values - center.values)
    return (resid / modulation.values).max(axis=1)


def _resolve_predictor(
    rule: PredictorRule, training: FunctionalSample
) -> tuple[Curve, str]:
    if isinstance(rule, str):
        if rule != "mean":
            raise ValueError(f"unknown predictor rule {rule!r}")
        return mean_curve(training), "mean"
    if isinstance(rule, Curve):
        check_same_grid(training.grid, rule.grid)
        return rule, "custom"
    if callable(rule):
        center = rule(training)
        check_same_grid(training.grid, center.grid)
        return center, "custom"
    raise ValueError(f"predictor rule must be 'mean', a Curve or a callable, got {rule!r}")


def _resolve_modulation(
    rule: ModulationRule, training: FunctionalSample, center: Curve, alpha: float
) -> ModulationCurve:
    if isinstance(rule, str):
        try:
            canonical = _MODULATION_ALIASES[rule]
        except KeyError:
            raise ValueError(
                f"unknown modulation rule {rule!r}; expected one of "
                f"{sorted(set(_MODULATION_ALIASES))}"
            ) from None
        if canonical == "constant":
            return constant_modulation(training.grid)
        if canonical == "std_dev":
            return std_dev_modulation(training)
        return envelope_modulation(training, center, alpha)
    if isinstance(rule, ModulationCurve):
        check_same_grid(training.grid, rule.grid)
        return rule
    if callable(rule):
        modulation = rule(training, center, alpha)
        check_same_grid(training.grid, modulation.grid)
        return modulation
    raise ValueError(
        f"modulation rule must be a name, a ModulationCurve or a callable, got {rule!r}"
    )


def _check_split(sample: FunctionalSample, split_indices: SplitIndices) -> None:
    if split_indices.n != sample.n:
        raise ValueError(
            f"split covers {split_indices.n} curves but the sample has {sample.n}"
        )


def _assemble(
    sample: FunctionalSample,
    alpha: float,
    split_indices: SplitIndices,
    center: Curve,
    modulation: ModulationCurve,
    predictor_label: str,
    scale: float,
    scores: np.ndarray,
    *,
    kind: str,
    closed: bool,
    full_space: bool,
    smoothed: SmoothedParams | None,
) -> PredictionBand:
    grid = sample.grid
    radius_values = np.zeros(grid.p) if full_space else scale * modulation.values
    return PredictionBand(
        grid=grid,
        center=center,
        radius=Curve(grid, radius_values),
        lower=Curve(grid, center.values - radius_values),
        upper=Curve(grid, center.values + radius_values),
        kind=kind,
        alpha=alpha,
        radius_scale=scale,
        modulation=modulation,
        closed=closed,
        full_space=full_space,
        calibration_scores=np.sort(scores),
        smoothed=smoothed,
        rho=split_indices.l / split_indices.n,
        seed=split_indices.seed,
        predictor=predictor_label,
    )


def fit_band(
    sample: FunctionalSample,
    alpha: float,
    split_indices: SplitIndices,
    predictor: PredictorRule = "mean",
    modulation: ModulationRule = "s0",
) -> PredictionBand:
    """Fit a split conformal simultaneous prediction band.

    Parameters
    ----------
    sample : FunctionalSample
        The observed curves.
    alpha : float
        Miscoverage level in (0, 1).
    split_indices : SplitIndices
        Training / calibration partition, e.g. from :func:`split`.
    predictor : "mean", Curve or callable
        Point predictor rule; built from the training set.
    modulation : "s0", "sigma", "sbar", ModulationCurve or callable
        Modulation rule; "s0" is the flat profile, "sigma" the normalized
        training standard deviation, "sbar" the trimmed training envelope.

    Returns
    -------
    PredictionBand
        Closed band centered at the predictor with radius equal to the
        ``ceil((l+1)(1-alpha))``-th smallest calibration score times the
        modulation.  When alpha is below 1/(l+1) the band is flagged
        ``full_space`` and contains every curve.
    """
    alpha = _check_alpha(alpha)
    _check_split(sample, split_indices)
    training = sample.subset(split_indices.training)
    calibration = sample.subset(split_indices.calibration)
    center, predictor_label = _resolve_predictor(predictor, training)
    mod = _resolve_modulation(modulation, training, center, alpha)
    scores = nonconformity_scores(calibration, center, mod)
    position = quantile_index(split_indices.l, alpha)
    if position is FULL_SPACE:
        return _assemble(
            sample, alpha, split_indices, center, mod, predictor_label,
            scale=0.0, scores=scores,
            kind=mod.kind, closed=True, full_space=True, smoothed=None,
        )
    scale = float(np.sort(scores)[position - 1])
    return _assemble(
        sample, alpha, split_indices, center, mod, predictor_label,
        scale=scale, scores=scores,
        kind=mod.kind, closed=True, full_space=False, smoothed=None,
    )


def fit_band_smoothed(
    sample: FunctionalSample,
    alpha: float,
    split_indices: SplitIndices,
    predictor: PredictorRule = "mean",
    modulation: ModulationRule = "s0",
    tau: float = 1.0,
) -> PredictionBand:
    """Fit the randomized (smoothed) variant of the split conformal band.

    ``tau`` is the tie-breaking draw in [0, 1]; with tau = 1 the band equals
    the non-smoothed one exactly.  The radius is the
    ``ceil(l + tau - (l+1)*alpha)``-th smallest calibration score; whether
    the band is closed or open depends on tau and on the number of score
    ties at the radius.  Alpha must lie in the admissible interval
    [tau/(l+1), (l+tau)/(l+1)); outside it the randomized set is not a band
    and an error is raised.
    """
    alpha = _check_alpha(alpha)
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    _check_split(sample, split_indices)
    l = split_indices.l
    position = ceil_int(l + tau - (l + 1) * alpha)
    if position < 1 or position > l:
        raise DegenerateStatisticsError(
            f"alpha={alpha} outside the admissible smoothed range "
            f"[{tau / (l + 1)}, {(l + tau) / (l + 1)}) for l={l}, tau={tau}"
        )
    training = sample.subset(split_indices.training)
    calibration = sample.subset(split_indices.calibration)
    center, predictor_label = _resolve_predictor(predictor, training)
    mod = _resolve_modulation(modulation, training, center, alpha)
    scores = nonconformity_scores(calibration, center, mod)
    order = np.sort(scores)
    scale = float(order[position - 1])
    tie_right = int(np.count_nonzero(order[position:] == scale))
    tie_left = int(np.count_nonzero(order[: position - 1] == scale))
    threshold = (
        (l + 1) * alpha - floor_int((l + 1) * alpha - tau) + tie_right
    ) / (tie_right + tie_left + 2)
    closed = tau > threshold
    return _assemble(
        sample, alpha, split_indices, center, mod, predictor_label,
        scale=scale, scores=scores,
        kind=mod.kind, closed=closed, full_space=False,
        smoothed=SmoothedParams(tau=tau, tie_right=tie_right, tie_left=tie_left),
    )


def pointwise_band(
    sample: FunctionalSample,
    alpha: float,
    split_indices: SplitIndices,
    predictor: PredictorRule = "mean",
) -> PredictionBand:
    """Concatenation of per-point conformal intervals (baseline).

    At each grid point the radius is the ``ceil((l+1)(1-alpha))``-th smallest
    absolute calibration residual at that point.  Each point is covered at
    the nominal level but the simultaneous coverage over the whole domain can
    be far lower; the band is always contained in the flat-modulation
    simultaneous band fitted on the same split.
    """
    alpha = _check_alpha(alpha)
    _check_split(sample, split_indices)
    training = sample.subset(split_indices.training)
    calibration = sample.subset(split_indices.calibration)
    center, predictor_label = _resolve_predictor(predictor, training)
    grid = sample.grid
    position = quantile_index(split_indices.l, alpha)
    if position is FULL_SPACE:
        zero = Curve(grid, np.zeros(grid.p))
        return PredictionBand(
            grid=grid, center=center, radius=zero, lower=center, upper=center,
            kind="pointwise", alpha=alpha, radius_scale=0.0, modulation=None,
            closed=True, full_space=True,
            rho=split_indices.l / split_indices.n, seed=split_indices.seed,
            predictor=predictor_label,
        )
    resid = np.abs(calibration.values - center.values)
    radius_values = np.sort(resid, axis=0)[position - 1, :]
    return PredictionBand(
        grid=grid,
        center=center,
        radius=Curve(grid, radius_values),
        lower=Curve(grid, center.values - radius_values),
        upper=Curve(grid, center.values + radius_values),
        kind="pointwise",
        alpha=alpha,
        radius_scale=1.0,
        modulation=None,
        closed=True,
        full_space=False,
        rho=split_indices.l / split_indices.n,
        seed=split_indices.seed,
        predictor=predictor_label,
    )


def naive_band(sample: FunctionalSample, alpha: float) -> PredictionBand:
    """Pointwise empirical quantile band of the full, unsplit sample.

    Bounds are the per-point empirical quantiles of orders alpha/2 and
    1 - alpha/2 (linear-interpolation convention).  This baseline carries no
    coverage guarantee and typically undercovers badly.
    """
    alpha = _check_alpha(alpha)
    if sample.n < 2:
        raise DegenerateStatisticsError(
            f"the naive band needs at least 2 curves, got {sample.n}"
        )
    grid = sample.grid
    lower = np.quantile(sample.values, alpha / 2.0, axis=0)
    upper = np.quantile(sample.values, 1.0 - alpha / 2.0, axis=0)
    center = 0.5 * (lower + upper)
    radius = 0.5 * (upper - lower)
    return PredictionBand(
        grid=grid,
        center=Curve(grid, center),
        radius=Curve(grid, radius),
        lower=Curve(grid, lower),
        upper=Curve(grid, upper),
        kind="naive",
        alpha=alpha,
        radius_scale=1.0,
        modulation=None,
        closed=True,
        full_space=False,
        predictor="quantile",
    )


def membership_mask(band: PredictionBand, curves) -> np.ndarray:
    """Boolean vector: which of the given curves lie inside the band.

    ``curves`` may be a FunctionalSample or an (n, p) array on the band's
    grid.
    """
    if isinstance(curves, FunctionalSample):
        check_same_grid(band.grid, curves.grid)
        values = curves.values
    else:
        values = np.asarray(curves, dtype=float)
        if values.ndim != 2 or values.shape[1] != band.grid.p:
            raise GridMismatchError(
                f"expected curves with {band.grid.p} points, got shape {values.shape}"
            )
    if band.full_space:
        return np.ones(values.shape[0], dtype=bool)
    lower = band.lower.values
    upper = band.upper.values
    if band.closed:
        inside = (values >= lower) & (values <= upper)
    else:
        inside = (values > lower) & (values < upper)
    return inside.all(axis=1)


def pointwise_inside(band: PredictionBand, curves) -> np.ndarray:
    """Per grid point, the fraction of the given curves inside the band there."""
    if isinstance(curves, FunctionalSample):
        check_same_grid(band.grid, curves.grid)
        values = curves.values
    else:
        values = np.asarray(curves, dtype=float)
    if band.full_space:
        return np.ones(band.grid.p)
    lower = band.lower.values
    upper = band.upper.values
    if band.closed:
        inside = (values >= lower) & (values <= upper)
    else:
        inside = (values > lower) & (values < upper)
    return inside.mean(axis=0)


def contains(band: PredictionBand, y: Curve) -> bool:
    """Whether the curve lies inside the band at every grid point."""
    check_same_grid(band.grid, y.grid)
    return bool(membership_mask(band, y.values[None, :])[0])


def p_value(band: PredictionBand, y_new: Curve) -> float:
    """Conformal p-value of a new curve against a fitted conformal band.

    Ranks the new curve's score among the calibration scores:
    (#{scores >= new score} + 1) / (l + 1), taking values in
    {1/(l+1), ..., 1}.  For closed non-smoothed bands the curve lies inside
    the band exactly when the p-value exceeds alpha.  Only defined for
    non-smoothed conformal bands (the randomized variant has no
    deterministic rank statistic to report).
    """
    if band.calibration_scores is None or band.modulation is None:
        raise ValueError(
            f"p-values need a conformal band with stored calibration scores, "
            f"got a {band.kind!r} band"
        )
    if band.smoothed is not None:
        raise ValueError(
            "p-values are not defined for smoothed bands; use contains() instead"
        )
    check_same_grid(band.grid, y_new.grid)
    resid = np.abs(y_new.values - band.center.values)
    score = float((resid / band.modulation.values).max())
    above = int(np.count_nonzero(band.calibration_scores >= score))
    l = band.calibration_scores.shape[0]
    return (above + 1) / (l + 1)


def truncate(band: PredictionBand, lower_limit: float) -> PredictionBand:
    """Clip the lower bound at a known hard limit of the data.

    When every admissible curve respects the limit (e.g. nonnegative
    velocities truncated at 0) membership, and hence coverage, is unchanged.
    A full-space band is returned untouched.  Raises if the limit exceeds
    the upper bound anywhere, which would empty the band.
    """
    lower_limit = float(lower_limit)
    if band.full_space:
        return band
    clipped = np.maximum(band.lower.values, lower_limit)
    if np.any(clipped > band.upper.values):
        raise ValueError(
            "truncation limit exceeds the band's upper bound somewhere; "
            "the clipped band would be empty"
        )
    effective = (
        lower_limit if band.lower_clip is None else max(band.lower_clip, lower_limit)
    )
    return dataclasses.replace(
        band, lower=Curve(band.grid, clipped), lower_clip=effective
    )
