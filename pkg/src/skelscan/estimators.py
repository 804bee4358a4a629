"""scikit-learn style wrappers around the scan, the chainers and the baselines."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .baselines import fit_pca, fit_regression_line, pca_objective
from .geometry import Dataset, distances_to
from .gridscan import coverage_report, density_table, threshold_K
from .skeleton import (
    chain_by_rank,
    chain_greedy_from_table,
    simplex_strip,
    vertex_coverage,
)
from .tuning import TuneBounds, adapt_threshold

__all__ = ["LeastSquaresLine", "PowerPCA", "SkeletonScan"]

CHAIN_MODES = ("greedy", "rank")


def _validate(X, *, allow_empty: bool = False) -> np.ndarray:
    return check_array(X, dtype=np.float64, ensure_min_samples=0 if allow_empty else 1)


class SkeletonScan(BaseEstimator):
    """Dense-ball skeleton of a point cloud.

    Parameters
    ----------
    r : float
        Grid step; balls of radius ``radius_scale * r`` sit on the grid nodes.
    nu : int
        Balls holding ``nu`` points or fewer are dropped.
    radius_scale : float
        Counting radius in units of ``r``.
    chain_mode : {"greedy", "rank"}
        Nearest-neighbour chaining, or joining centres in rank order.
    gap_factor : float or None
        Greedy chains never hop farther than ``gap_factor * r``.
    s : int
        Simplex dimension of the strip built on the chain.
    tune : TuneBounds or None
        When set, ``nu`` is only the starting guess of the threshold search.
    dense_nodes : bool
        Scan every grid node in the bounding box (N <= 3).
    n_jobs : int or None
        Counting threads; ``None`` reads ``SKELSCAN_THREADS``.

    Attributes
    ----------
    table_ : DensityTable
    nu_, K_ : int
    skeleton_ : Skeleton
    tune_ : TuneResult or None
    coverage_ : tuple of int
        ``(covered, uncovered)`` against the top ``K_`` balls.
    """

    def __init__(self, r=1.0, nu=1, radius_scale=1.0, chain_mode="greedy",
                 gap_factor=3.0, s=1, tune=None, dense_nodes=False, n_jobs=None):
        self.r = r
        self.nu = nu
        self.radius_scale = radius_scale
        self.chain_mode = chain_mode
        self.gap_factor = gap_factor
        self.s = s
        self.tune = tune
        self.dense_nodes = dense_nodes
        self.n_jobs = n_jobs

    def _check_params(self):
        if self.chain_mode not in CHAIN_MODES:
            raise ValueError(f"chain_mode must be one of {CHAIN_MODES}, got {self.chain_mode!r}")
        if int(self.s) < 1:
            raise ValueError("s must be >= 1")
        if int(self.nu) < 0:
            raise ValueError("nu must be >= 0")

    def fit(self, X, y=None):
        self._check_params()
        X = _validate(X)
        data = Dataset(X)
        self.n_features_in_ = data.dim
        self.table_ = density_table(data, self.r, self.radius_scale,
                                    dense_nodes=self.dense_nodes, n_jobs=self.n_jobs)
        self.tune_ = None
        nu = int(self.nu)
        if self.tune is not None:
            bounds = self.tune if isinstance(self.tune, TuneBounds) else TuneBounds(**self.tune)
            self.tune_ = adapt_threshold(self.table_, max(nu, 1), bounds)
            nu = self.tune_.nu
        self.nu_ = nu
        self.K_ = threshold_K(self.table_, nu)
        if self.chain_mode == "rank":
            chain = chain_by_rank(self.table_, self.K_)
        else:
            chain = chain_greedy_from_table(self.table_, self.K_, self.gap_factor)
        self.skeleton_ = simplex_strip(chain, int(self.s))
        self.coverage_ = coverage_report(data, self.table_, self.K_)
        return self

    def transform(self, X):
        """Distances from each row to each skeleton vertex, shape ``(J, K_)``."""
        check_is_fitted(self, "skeleton_")
        X = _validate(X)
        V = self.skeleton_.vertices
        return np.stack([distances_to(X, v) for v in V], axis=1) if len(V) else np.empty((len(X), 0))

    def predict(self, X):
        """Index of the nearest skeleton vertex within the counting radius, else -1."""
        D = self.transform(X)
        if D.shape[1] == 0:
            return np.full(len(D), -1, dtype=np.int64)
        nearest = np.argmin(D, axis=1)
        hit = D[np.arange(len(D)), nearest] <= self.table_.radius
        return np.where(hit, nearest, -1).astype(np.int64)

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)

    def score(self, X, y=None):
        """Fraction of rows within the counting radius of some skeleton vertex."""
        check_is_fitted(self, "skeleton_")
        return vertex_coverage(Dataset(_validate(X)), self.skeleton_, self.table_.radius)


class PowerPCA(TransformerMixin, BaseEstimator):
    """PCA by power iteration with deflation (population covariance)."""

    def __init__(self, n_components=1, seed=0):
        self.n_components = n_components
        self.seed = seed

    def fit(self, X, y=None):
        X = _validate(X)
        self.n_features_in_ = X.shape[1]
        self.frame_ = fit_pca(X, int(self.n_components), seed=self.seed)
        self.mean_ = self.frame_.mean
        self.components_ = self.frame_.directions
        self.explained_variance_ = self.frame_.variances
        return self

    def transform(self, X):
        check_is_fitted(self, "frame_")
        X = _validate(X)
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "frame_")
        return np.asarray(Z) @ self.components_ + self.mean_

    def objective(self, X) -> float:
        """Sum of squared distances from the rows to the fitted affine subspace."""
        check_is_fitted(self, "frame_")
        return pca_objective(_validate(X), self.frame_, self.frame_.k)


class LeastSquaresLine(RegressorMixin, BaseEstimator):
    """Straight line ``y = a1 * x + a2`` by ordinary least squares on one feature."""

    def fit(self, X, y):
        X = _validate(X)
        if X.shape[1] != 1:
            raise ValueError("LeastSquaresLine takes exactly one feature")
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        self.n_features_in_ = 1
        self.line_ = fit_regression_line(np.column_stack([X[:, 0], y]))
        self.coef_ = np.array([self.line_.a1])
        self.intercept_ = self.line_.a2
        return self

    def predict(self, X):
        check_is_fitted(self, "line_")
        X = _validate(X)
        return self.line_(X[:, 0])
