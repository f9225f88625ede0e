"""Scikit-learn style estimator wrapping the split conformal band fit."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from funcbands.conformal import (
    fit_band,
    fit_band_smoothed,
    membership_mask,
    split,
    truncate,
)
from funcbands.grids import FunctionalSample
from funcbands.validation import check_curve_matrix, resolve_grid


class ConformalBandPredictor(BaseEstimator):
    """Split conformal simultaneous prediction bands for grid-sampled curves.

    Each sample is one curve observed on a shared uniform grid, passed as a
    row of X.  ``fit`` splits the curves into training and calibration halves,
    builds a point predictor and a modulation profile from the training half,
    and calibrates the band radius on the held-out scores.  ``predict``
    reports band membership of new curves and ``score_samples`` their
    conformal p-values.

    Parameters
    ----------
    alpha : float, default=0.1
        Miscoverage level in (0, 1); the band covers a new i.i.d. curve with
        probability at least 1 - alpha.
    rho : float, default=0.5
        Fraction of curves assigned to the calibration set.
    modulation : {"s0", "sigma", "sbar"}, ModulationCurve or callable, default="s0"
        Width profile of the band: flat, training standard deviation, or
        trimmed training envelope.
    predictor : {"mean"}, Curve or callable, default="mean"
        Point predictor built from the training curves.
    smoothed : bool, default=False
        Use the randomized variant whose coverage is exactly 1 - alpha.
    tau : float or None, default=None
        Tie-breaking draw for the smoothed variant; drawn from
        ``random_state`` when None.
    lower_limit : float or None, default=None
        Clip the band's lower bound at a known hard limit of the data.
    random_state : int or None, default=None
        Seed for the split (and for tau); None draws a fresh seed.

    Attributes
    ----------
    band_ : PredictionBand
        The fitted band.
    grid_ : Grid
        The shared grid the curves live on.
    n_features_in_ : int
        Number of grid points seen during fit.

    Examples
    --------
    >>> import numpy as np
    >>> from funcbands import ConformalBandPredictor
    >>> rng = np.random.default_rng(0)
    >>> X = rng.normal(size=(40, 25))
    >>> model = ConformalBandPredictor(alpha=0.2, random_state=7).fit(X)
    >>> inside = model.predict(rng.normal(size=(5, 25)))
    >>> lower, upper = model.predict_band()
    """

    def __init__(
        self,
        alpha=0.1,
        rho=0.5,
        modulation="s0",
        predictor="mean",
        smoothed=False,
        tau=None,
        lower_limit=None,
        random_state=None,
    ):
        self.alpha = alpha
        self.rho = rho
        self.modulation = modulation
        self.predictor = predictor
        self.smoothed = smoothed
        self.tau = tau
        self.lower_limit = lower_limit
        self.random_state = random_state

    def fit(self, X, y=None, grid=None):
        """Fit the band on curves X of shape (n_curves, n_points).

        Parameters
        ----------
        X : array-like of shape (n_curves, n_points)
            One curve per row, evaluated on the shared grid.
        y : ignored
            Present for scikit-learn API compatibility.
        grid : None, Grid, (a, b) pair or array of points, default=None
            Domain of the curves; None uses the unit interval.

        Returns
        -------
        self : object
        """
        X = check_curve_matrix(X)
        self.grid_ = resolve_grid(grid, X.shape[1])
        sample = FunctionalSample(self.grid_, X)

        if self.random_state is None:
            seed = int(np.random.SeedSequence().generate_state(1)[0])
        else:
            seed = int(self.random_state)
        self.split_ = split(sample.n, self.rho, seed)

        if self.smoothed:
            if self.tau is None:
                tau = float(np.random.default_rng(
                    np.random.SeedSequence((seed, 1))
                ).uniform())
            else:
                tau = float(self.tau)
            band = fit_band_smoothed(
                sample, self.alpha, self.split_,
                predictor=self.predictor, modulation=self.modulation, tau=tau,
            )
        else:
            band = fit_band(
                sample, self.alpha, self.split_,
                predictor=self.predictor, modulation=self.modulation,
            )
        if self.lower_limit is not None:
            band = truncate(band, self.lower_limit)
        self.band_ = band
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Band membership of each curve in X, as a boolean array."""
        check_is_fitted(self, "band_")
        X = check_curve_matrix(X, self.n_features_in_)
        return membership_mask(self.band_, X)

    def score_samples(self, X):
        """Conformal p-value of each curve in X.

        A curve lies inside the (closed, non-smoothed) band exactly when its
        p-value exceeds alpha.
        """
        check_is_fitted(self, "band_")
        X = check_curve_matrix(X, self.n_features_in_)
        band = self.band_
        if band.calibration_scores is None or band.modulation is None:
            raise ValueError("p-values need a conformal band with stored scores")
        if band.smoothed is not None:
            raise ValueError("p-values are not defined for smoothed bands")
        resid = np.abs(X - band.center.values)
        new_scores = (resid / band.modulation.values).max(axis=1)
        scores = band.calibration_scores  # sorted ascending
        l = scores.shape[0]
        above = l - np.searchsorted(scores, new_scores, side="left")
        return (above + 1) / (l + 1)

    def predict_band(self):
        """The fitted band bounds as a (lower, upper) pair of arrays."""
        check_is_fitted(self, "band_")
        return (
            self.band_.lower.values.copy(),
            self.band_.upper.values.copy(),
        )
