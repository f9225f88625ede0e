"""Scenario generators and the Monte Carlo coverage / size experiment harness.

Three synthetic data-generating processes are provided:

* S1 - randomly phase-shifted trigonometric curves with correlated Gaussian
  coefficients; variability is constant along the domain.
* S2 - cubic B-spline expansions with independent Gaussian coefficients whose
  middle coefficient has a much smaller variance, so variability dips in the
  central part of the domain.
* S3 - S2 contaminated by outliers: each curve independently draws, with
  probability beta, a middle coefficient with a much larger variance.

The experiment harness fits the requested band methods on fresh samples over
many replications, estimates each band's conditional coverage with fresh test
curves, and aggregates coverage and size into report objects.  All randomness
derives from (master_seed, replication_index) seed sequences, so serial and
parallel execution and repeated runs agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from funcbands.conformal import (
    PredictionBand,
    SplitIndices,
    fit_band,
    fit_band_smoothed,
    membership_mask,
    naive_band,
    pointwise_band,
    pointwise_inside,
    split,
)
from funcbands.efficiency import band_size
from funcbands.grids import Curve, FunctionalSample, Grid, make_uniform_grid
from funcbands.modulation import _check_alpha
from funcbands.orderstats import floor_int

SCENARIOS = ("S1", "S2", "S3")

CONFORMAL_METHODS = ("s0", "sigma", "sbar")
BASELINE_METHODS = ("naive", "pointwise")

# S1 coefficient covariance: unit variances, 0.6 off-diagonal.
_S1_COV = np.array(
    [[1.0, 0.6, 0.6], [0.6, 1.0, 0.6], [0.6, 0.6, 1.0]]
)

# S2/S3 spline setup: order-4 basis with interior knots 0.1..0.9 (13 basis
# functions); independent coefficients with sd 0.03 except the middle one.
SPLINE_ORDER = 4
INTERIOR_KNOTS = tuple(np.round(np.arange(1, 10) * 0.1, 10))
_S2_SD = np.full(13, 0.03)
_S2_SD[6] = 0.003
_S3_OUTLIER_SD = _S2_SD.copy()
_S3_OUTLIER_SD[6] = 0.3


def _default_grid() -> Grid:
    return make_uniform_grid(0.0, 1.0, 101)


@dataclass(frozen=True)
class ScenarioConfig:
    """Data-generating process: scenario tag, sample size, grid, seed.

    ``beta`` is the outlier weight and only matters for S3.
    """

    scenario: str
    n: int
    grid: Grid = field(default_factory=_default_grid)
    beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.n < 2:
            raise ValueError(f"scenario needs n >= 2 curves, got n={self.n}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")


def _psd_factor(covariance: np.ndarray) -> np.ndarray:
    """A Cholesky-type factor L with L @ L.T = covariance, for any PSD input."""
    covariance = np.asarray(covariance, dtype=float)
    try:
        return np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        eigenvalues, vectors = np.linalg.eigh(covariance)
        tol = 1e-10 * max(1.0, float(np.abs(eigenvalues).max()))
        if eigenvalues.min() < -tol:
            raise ValueError(
                f"covariance is not positive semi-definite "
                f"(smallest eigenvalue {eigenvalues.min()!r})"
            ) from None
        return vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def sample_multivariate_normal(
    mean, covariance, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Draw from N(mean, covariance) as mean + L z with z standard normal.

    Returns shape (d,) when size is None, else (size, d).  A zero covariance
    returns the mean exactly.
    """
    mean = np.asarray(mean, dtype=float)
    factor = _psd_factor(covariance)
    if size is None:
        z = rng.standard_normal(mean.shape[0])
        return mean + factor @ z
    z = rng.standard_normal((size, mean.shape[0]))
    return mean + z @ factor.T


def bspline_basis(order: int, interior_knots, t: float) -> np.ndarray:
    """All B-spline basis values at t, on [0, 1] with clamped boundary knots.

    Cox-de Boor recursion over the knot vector obtained by repeating 0 and 1
    ``order`` times around the interior knots; returns
    ``order + len(interior_knots)`` values summing to 1.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    order = int(order)
    interior = np.asarray(interior_knots, dtype=float)
    if interior.size and (
        np.any(np.diff(interior) <= 0)
        or interior[0] <= 0.0
        or interior[-1] >= 1.0
    ):
        raise ValueError("interior knots must be strictly increasing inside (0, 1)")
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} outside the basis domain [0, 1]")
    knots = np.concatenate([np.zeros(order), interior, np.ones(order)])
    n_basis = order + interior.size

    # Degree 0: indicator of the half-open knot intervals; the right domain
    # endpoint belongs to the last non-empty interval.
    values = np.zeros(knots.size - 1)
    if t == 1.0:
        values[n_basis - 1] = 1.0
    else:
        values[(knots[:-1] <= t) & (t < knots[1:])] = 1.0

    for degree in range(1, order):
        prev = values
        count = knots.size - degree - 1
        values = np.zeros(count)
        for i in range(count):
            left_den = knots[i + degree] - knots[i]
            right_den = knots[i + degree + 1] - knots[i + 1]
            acc = 0.0
            if left_den > 0.0:
                acc += (t - knots[i]) / left_den * prev[i]
            if right_den > 0.0:
                acc += (knots[i + degree + 1] - t) / right_den * prev[i + 1]
            values[i] = acc
    return values[:n_basis]


@lru_cache(maxsize=16)
def _design_matrix(order: int, interior_knots: tuple, a: float, b: float, p: int) -> np.ndarray:
    grid = make_uniform_grid(a, b, p)
    columns = [bspline_basis(order, interior_knots, t) for t in grid.points]
    matrix = np.array(columns).T  # (n_basis, p)
    matrix.flags.writeable = False
    return matrix


def spline_design_matrix(grid: Grid) -> np.ndarray:
    """Basis-by-point matrix of the scenario spline system on the given grid."""
    if not (grid.a == 0.0 and grid.b == 1.0):
        raise ValueError("the scenario spline basis is defined on [0, 1]")
    return _design_matrix(SPLINE_ORDER, INTERIOR_KNOTS, grid.a, grid.b, grid.p)


def generate_scenario(
    config: ScenarioConfig,
    rng: np.random.Generator | None = None,
    size: int | None = None,
) -> FunctionalSample:
    """Draw curves from the configured scenario, evaluated on its grid.

    ``size`` overrides the configured sample size (used to draw fresh test
    curves from the same process); ``rng`` overrides the configured seed.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    count = config.n if size is None else int(size)
    grid = config.grid
    if config.scenario == "S1":
        coef = sample_multivariate_normal(np.zeros(3), _S1_COV, rng, size=count)
        shift = rng.uniform(-1.0 / 6.0, 1.0 / 6.0, size=count)
        phase = 6.0 * np.pi * (grid.points[None, :] + shift[:, None])
        values = (
            coef[:, 0:1]
            + coef[:, 1:2] * np.cos(phase)
            + coef[:, 2:3] * np.sin(phase)
        )
    elif config.scenario == "S2":
        coef = sample_multivariate_normal(
            np.zeros(13), np.diag(_S2_SD**2), rng, size=count
        )
        values = coef @ spline_design_matrix(grid)
    else:  # S3: each curve is an outlier independently with probability beta
        outlier = rng.random(count) < config.beta
        coef = np.empty((count, 13))
        regular = ~outlier
        coef[regular] = sample_multivariate_normal(
            np.zeros(13), np.diag(_S2_SD**2), rng, size=int(regular.sum())
        )
        coef[outlier] = sample_multivariate_normal(
            np.zeros(13), np.diag(_S3_OUTLIER_SD**2), rng, size=int(outlier.sum())
        )
        values = coef @ spline_design_matrix(grid)
    return FunctionalSample(grid, values)


def theoretical_coverage(l: int, alpha: float, smoothed: bool = False) -> float:
    """Exact coverage of the split conformal set: 1 - floor((l+1)alpha)/(l+1).

    The smoothed variant is exact at the nominal level, 1 - alpha.
    """
    alpha = _check_alpha(alpha)
    if smoothed:
        return 1.0 - alpha
    if l < 1:
        raise ValueError(f"calibration size must be >= 1, got {l}")
    return 1.0 - floor_int((l + 1) * alpha) / (l + 1)


def empirical_conditional_coverage(
    band: PredictionBand,
    config: ScenarioConfig,
    test_curves: int,
    rng: np.random.Generator,
) -> float:
    """Fraction of fresh scenario curves that fall inside the fitted band."""
    if test_curves < 1:
        raise ValueError(f"need at least one test curve, got {test_curves}")
    fresh = generate_scenario(config, rng=rng, size=test_curves)
    return float(membership_mask(band, fresh).mean())


def pointwise_coverage_curve(
    band: PredictionBand,
    config: ScenarioConfig,
    test_curves: int,
    rng: np.random.Generator,
) -> Curve:
    """Per-grid-point coverage of the band against fresh scenario curves."""
    if test_curves < 1:
        raise ValueError(f"need at least one test curve, got {test_curves}")
    fresh = generate_scenario(config, rng=rng, size=test_curves)
    return Curve(band.grid, pointwise_inside(band, fresh))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full Monte Carlo experiment: scenario, level, split ratio, methods.

    ``methods`` mixes conformal modulation names ("s0", "sigma", "sbar") with
    the "naive" and "pointwise" baselines.  Each replication derives its RNG
    streams from (master_seed, replication_index), so reports are bit-for-bit
    reproducible.
    """

    scenario: ScenarioConfig
    alpha: float = 0.1
    rho: float = 0.5
    replications: int = 500
    test_curves: int = 10000
    methods: tuple[str, ...] = CONFORMAL_METHODS + BASELINE_METHODS
    smoothed: bool = False
    master_seed: int = 0

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.test_curves < 1:
            raise ValueError("need at least one test curve per replication")
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("need at least one method")
        known = set(CONFORMAL_METHODS) | set(BASELINE_METHODS)
        unknown = [m for m in methods if m not in known]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; expected a subset of {sorted(known)}")
        object.__setattr__(self, "methods", methods)


@dataclass(frozen=True)
class CoverageReport:
    """Per-method empirical conditional coverage across replications.

    ``mean``/``sd`` aggregate the per-replication conditional coverages;
    ``theoretical`` is the exact coverage implied by (l, alpha);
    ``ci_contains_nominal`` flags whether the 99% t-interval for the
    unconditional coverage includes the nominal level 1 - alpha.
    """

    methods: tuple[str, ...]
    mean: dict[str, float]
    sd: dict[str, float]
    per_replication: dict[str, np.ndarray]
    theoretical: float
    nominal: float
    ci_lower: dict[str, float]
    ci_upper: dict[str, float]
    ci_contains_nominal: dict[str, bool]
    replications: int


@dataclass(frozen=True)
class SizeReport:
    """Per-method band size (area between bounds) across replications."""

    methods: tuple[str, ...]
    mean: dict[str, float]
    sd: dict[str, float]
    per_replication: dict[str, np.ndarray]
    full_space_count: dict[str, int]
    replications: int


def _fit_method(
    method: str,
    sample: FunctionalSample,
    alpha: float,
    indices: SplitIndices,
    smoothed: bool,
    tau: float,
) -> PredictionBand:
    if method == "naive":
        return naive_band(sample, alpha)
    if method == "pointwise":
        return pointwise_band(sample, alpha, indices)
    if smoothed:
        return fit_band_smoothed(sample, alpha, indices, modulation=method, tau=tau)
    return fit_band(sample, alpha, indices, modulation=method)


def _replication_seed(master_seed: int, replication: int, stream: int) -> int:
    ss = np.random.SeedSequence((master_seed, replication, stream))
    return int(ss.generate_state(1, np.uint64)[0] % (2**63))


def run_experiment(config: ExperimentConfig) -> tuple[CoverageReport, SizeReport]:
    """Run the Monte Carlo coverage and size experiment.

    Per replication: draw a fresh sample, split it, fit every requested
    method's band, estimate its conditional coverage with fresh test curves
    (shared across methods within the replication) and record its size.
    Failures of individual fits are re-raised with the replication index
    attached rather than silently skipped.

    Returns the coverage and size reports; per-replication raw values are
    attached to both.
    """
    scen = config.scenario
    n_rep = config.replications
    coverage = {m: np.empty(n_rep) for m in config.methods}
    sizes = {m: np.empty(n_rep) for m in config.methods}

    for rep in range(n_rep):
        ss = np.random.SeedSequence((config.master_seed, rep))
        rng_sample, rng_test, rng_tau = (
            np.random.default_rng(child) for child in ss.spawn(3)
        )
        sample = generate_scenario(scen, rng=rng_sample)
        indices = split(scen.n, config.rho, _replication_seed(config.master_seed, rep, 3))
        test = generate_scenario(scen, rng=rng_test, size=config.test_curves)
        tau = float(rng_tau.uniform()) if config.smoothed else 1.0
        for method in config.methods:
            try:
                band = _fit_method(method, sample, config.alpha, indices, config.smoothed, tau)
            except Exception as exc:
                raise RuntimeError(
                    f"replication {rep}: fitting method {method!r} failed: {exc}"
                ) from exc
            coverage[method][rep] = membership_mask(band, test).mean()
            sizes[method][rep] = band_size(band).q

    l = split(scen.n, config.rho, 0).l
    theoretical = theoretical_coverage(l, config.alpha, smoothed=config.smoothed)
    nominal = 1.0 - config.alpha

    mean_c = {m: float(v.mean()) for m, v in coverage.items()}
    sd_c = {
        m: float(v.std(ddof=1)) if n_rep > 1 else 0.0 for m, v in coverage.items()
    }
    if n_rep > 1:
        t_crit = float(stats.t.ppf(0.995, n_rep - 1))
        half = {m: t_crit * sd_c[m] / np.sqrt(n_rep) for m in config.methods}
    else:
        half = {m: np.inf for m in config.methods}
    ci_lower = {m: mean_c[m] - half[m] for m in config.methods}
    ci_upper = {m: mean_c[m] + half[m] for m in config.methods}
    contains_nominal = {
        m: bool(ci_lower[m] <= nominal <= ci_upper[m]) for m in config.methods
    }

    coverage_report = CoverageReport(
        methods=config.methods,
        mean=mean_c,
        sd=sd_c,
        per_replication=coverage,
        theoretical=theoretical,
        nominal=nominal,
        ci_lower=ci_lower,
        ci_upper=ci_upper,
        ci_contains_nominal=contains_nominal,
        replications=n_rep,
    )
    finite_sizes = {m: v[np.isfinite(v)] for m, v in sizes.items()}
    size_report = SizeReport(
        methods=config.methods,
        mean={
            m: float(v.mean()) if v.size else float("inf")
            for m, v in finite_sizes.items()
        },
        sd={
            m: float(v.std(ddof=1)) if v.size > 1 else 0.0
            for m, v in finite_sizes.items()
        },
        per_replication=sizes,
        full_space_count={
            m: int(np.count_nonzero(~np.isfinite(v))) for m, v in sizes.items()
        },
        replications=n_rep,
    )
    return coverage_report, size_report
