"""scikit-learn style wrappers around the functional API.

The functions in :mod:`regularity` and :mod:`wave_solver` remain the primary
interface; these classes only let the diagnostics sit in a Pipeline or a
parameter search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import InsufficientModesError, NotGevreyDiagnosableError
from .regularity import DECAY_FLOOR, MIN_MODES, fourier_decay_fit, gevrey_index_fit
from .strip_problem import StripGrid, WaveParameters
from .wave_solver import continuation_run


class FourierDecay(BaseEstimator, TransformerMixin):
    """Each row of X is one periodic trace; output columns are (rate, intercept, R^2).

    Rows without enough usable modes give NaN unless ``strict`` is set.
    """

    def __init__(self, floor=DECAY_FLOOR, min_modes=MIN_MODES, strict=False):
        self.floor = floor
        self.min_modes = min_modes
        self.strict = strict

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        out = np.full((X.shape[0], 3), np.nan)
        for i, row in enumerate(X):
            try:
                fit = fourier_decay_fit(row, self.floor, self.min_modes)
            except InsufficientModesError:
                if self.strict:
                    raise
                continue
            out[i] = fit.rate, fit.intercept, fit.r_squared
        return out


class GevreyIndex(BaseEstimator, TransformerMixin):
    """Each row of X is one periodic trace; output columns are (s_hat, fit residual)."""

    def __init__(self, floor=DECAY_FLOOR, min_modes=MIN_MODES, strict=False):
        self.floor = floor
        self.min_modes = min_modes
        self.strict = strict

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        out = np.full((X.shape[0], 2), np.nan)
        for i, row in enumerate(X):
            try:
                fit = gevrey_index_fit(row, self.floor, self.min_modes)
            except (InsufficientModesError, NotGevreyDiagnosableError):
                if self.strict:
                    raise
                continue
            out[i] = fit.s_hat, fit.fit_residual
        return out


class WaveBranch(BaseEstimator, RegressorMixin):
    """Continuation along the wave branch.

    ``fit(X)`` takes amplitudes as a single column, solves the branch up to each and
    keeps the states in ``states_``; ``predict(X)`` interpolates the Bernoulli head
    ``Q`` linearly in ``amplitude**2``, the natural variable near the bifurcation.
    """

    def __init__(self, params: WaveParameters = None, n_q=64, n_p=32, kappa0=None,
                 tol=1e-10, max_iter=25):
        self.params = params
        self.n_q = n_q
        self.n_p = n_p
        self.kappa0 = kappa0
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 1:
            raise ValueError("X must be a single column of amplitudes")
        if self.params is None:
            raise ValueError("params must be set")
        amps = np.sort(np.unique(X[:, 0]))
        grid = StripGrid(self.n_q, self.n_p, self.params.wavelength, self.params.p0)
        self.states_ = continuation_run(self.params, list(amps), grid, kappa0=self.kappa0,
                                        tol=self.tol, max_iter=self.max_iter)
        self.amplitudes_ = np.array([s.amplitude for s in self.states_])
        self.Q_ = np.array([s.Q for s in self.states_])
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "states_")
        X = check_array(X)
        return np.interp(X[:, 0] ** 2, self.amplitudes_**2, self.Q_)
