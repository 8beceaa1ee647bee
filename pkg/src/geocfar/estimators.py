"""scikit-learn style wrappers around the functional API.

Windows are passed as complex arrays of shape ``(N, 1 + K, m)``: row 0 of
each window is the cell under test and rows ``1..K`` are the secondary
cells. scikit-learn's own ``check_array`` rejects complex input, so the
package validators are used instead.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .detector import (DetectorConfig, quantile_threshold,
                       statistic_from_covariances)
from .mean import MeanConfig, mean_matrix
from .signal_model import toeplitz_covariance
from .validation import check_snapshots, check_square


def check_windows(X):
    """Validate a ``(N, 1 + K, m)`` stack of range windows, ``K >= 1``."""
    X = check_snapshots(X, "X")
    if X.ndim != 3 or X.shape[1] < 2:
        raise ValueError(f"X must have shape (N, 1 + K, m) with K >= 1, got {X.shape}")
    return X


class ToeplitzCovariances(TransformerMixin, BaseEstimator):
    """Map snapshots ``(N, m)`` to Toeplitz HPD matrices ``(N, m, m)``."""

    def __init__(self, normalize=True):
        self.normalize = normalize

    def fit(self, X, y=None):
        X = check_snapshots(X, "X")
        self.n_features_in_ = X.shape[-1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_snapshots(X, "X")
        if X.shape[-1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} pulses, got {X.shape[-1]}")
        return toeplitz_covariance(X, normalize=self.normalize)


class GeometricMean(BaseEstimator):
    """Mean of a set of HPD matrices under a geometric measure."""

    def __init__(self, kind="kld", max_iters=200, tol=1e-8, step=None):
        self.kind = kind
        self.max_iters = max_iters
        self.tol = tol
        self.step = step

    def fit(self, X, y=None):
        X = check_square(X, "X")
        if X.ndim != 3:
            raise ValueError("X must have shape (K, m, m)")
        cfg = MeanConfig(kind=self.kind, max_iters=self.max_iters,
                         tol=self.tol, step=self.step)
        res = mean_matrix(cfg.kind, X, cfg)
        self.mean_ = res.matrix
        self.converged_ = bool(np.all(res.converged))
        self.n_iter_ = res.iterations
        return self


class MatrixCFARDetector(ClassifierMixin, BaseEstimator):
    """Matrix CFAR detector with a Monte Carlo calibrated threshold.

    ``fit`` takes clutter-only windows (or labelled windows, of which only
    the ``y == 0`` ones are used) and sets ``threshold_`` to the
    ``ceil((1 - pf) N)``-th smallest statistic. ``predict`` returns 1 (H1)
    when the statistic exceeds the threshold.
    """

    def __init__(self, kind="kld", enhanced=False, n=None, pf=1e-2,
                 guard_cells=0, max_iters=200, tol=1e-8):
        self.kind = kind
        self.enhanced = enhanced
        self.n = n
        self.pf = pf
        self.guard_cells = guard_cells
        self.max_iters = max_iters
        self.tol = tol

    def _config(self):
        mean_cfg = MeanConfig(kind=self.kind, max_iters=self.max_iters, tol=self.tol)
        return DetectorConfig(kind=self.kind, enhanced=self.enhanced, n=self.n,
                              pf=self.pf, mean_cfg=mean_cfg,
                              guard_cells=self.guard_cells)

    def statistic(self, X):
        """Detection statistic of every window in ``X``."""
        X = check_windows(X)
        cfg = self._config()
        Cx = toeplitz_covariance(X[:, 0])
        Cs = toeplitz_covariance(X[:, 1:])
        C_hat = mean_matrix(cfg.kind, Cs, cfg.mean_cfg).matrix
        return statistic_from_covariances(cfg, Cx, C_hat)

    def fit(self, X, y=None):
        X = check_windows(X)
        if y is not None:
            y = np.asarray(y)
            if y.shape != (X.shape[0],):
                raise ValueError("y must have one label per window")
            X = X[y == 0]
            if X.shape[0] == 0:
                raise ValueError("no clutter-only (y == 0) windows to calibrate on")
        stats = self.statistic(X)
        self.threshold_ = quantile_threshold(stats, self.pf)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[-1]
        self.n_calibration_ = X.shape[0]
        return self

    def decision_function(self, X):
        """Statistic minus threshold; positive means H1."""
        check_is_fitted(self, "threshold_")
        return self.statistic(X) - self.threshold_

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)
