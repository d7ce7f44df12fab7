"""Estimator-style wrappers (fit / predict / get_params) over the functional API.

The wrappers hold a fitted point window and delegate to the counting,
search and witness modules.  ``fit`` accepts either an ``(N, d)`` array or
a :class:`~steinhaus.pointset.PointSet`; arrays are treated as complete up
to their largest norm unless ``horizon`` is given.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .norms import NormSpec, norm_eval, parse_norm
from .pointset import PointSet, build_index, count_in_ball
from .search import SearchConfig, find_ball_growth, find_ball_sorted
from .sprime import STRATEGIES, TAU_SEP, find_witness


def check_points(X, dim: Optional[int] = None) -> np.ndarray:
    """Finite float array of shape (N, d), optionally with a fixed d."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=0)
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"expected {dim} columns, got {X.shape[1]}")
    return X


def check_norm(norm, dim: int, beta=None) -> NormSpec:
    if isinstance(norm, NormSpec):
        if norm.dim != dim:
            raise ValueError(f"norm is {norm.dim}-dimensional, data is {dim}-dimensional")
        return norm
    return parse_norm(norm, dim=dim, beta=beta)


def as_point_set(X, norm, horizon=None, beta=None) -> PointSet:
    if isinstance(X, PointSet):
        return X
    X = check_points(X)
    spec = check_norm(norm, X.shape[1], beta)
    if horizon is None:
        horizon = float(norm_eval(spec, X).max()) if len(X) else 0.0
    return PointSet(X, horizon, spec)


class _WindowEstimator(BaseEstimator):
    def _fit_window(self, X):
        ps = as_point_set(X, self.norm, self.horizon, self.beta)
        self.points_ = ps
        self.index_ = build_index(ps, self.cell_size)
        self.norm_spec_ = check_norm(self.norm, ps.dim, self.beta)
        self.n_features_in_ = ps.dim
        return self

    def _centers(self, X) -> np.ndarray:
        check_is_fitted(self, "index_")
        return check_points(X, self.n_features_in_)


class BallCounter(_WindowEstimator):
    """Counts window points in balls of a fixed radius.

    ``predict(centers)`` returns one count per row.
    """

    def __init__(self, radius=1.0, norm="l2", mode="open", horizon=None, cell_size=None, beta=None):
        self.radius = radius
        self.norm = norm
        self.mode = mode
        self.horizon = horizon
        self.cell_size = cell_size
        self.beta = beta

    def fit(self, X, y=None):
        return self._fit_window(X)

    def query(self, center, radius=None):
        check_is_fitted(self, "index_")
        r = self.radius if radius is None else radius
        return count_in_ball(self.index_, center, r, self.norm_spec_, self.mode)

    def predict(self, X):
        centers = self._centers(X)
        return np.array([self.query(c).count for c in centers], dtype=np.int64)


class SteinhausBallFinder(_WindowEstimator):
    """Finds, for each center, a ball around it holding exactly ``n`` points.

    ``predict`` returns the radii; the certificates of the last call are
    kept in ``certificates_``.  ``method`` is ``"sorted"`` or ``"growth"``.
    """

    def __init__(self, n=1, method="sorted", norm="l2", horizon=None, cell_size=None, beta=None,
                 tau_shell=1e-9, tau_tie=1e-9, delta_witness=0.05, max_iterations=64, seed=0):
        self.n = n
        self.method = method
        self.norm = norm
        self.horizon = horizon
        self.cell_size = cell_size
        self.beta = beta
        self.tau_shell = tau_shell
        self.tau_tie = tau_tie
        self.delta_witness = delta_witness
        self.max_iterations = max_iterations
        self.seed = seed

    def fit(self, X, y=None):
        if self.method not in ("sorted", "growth"):
            raise ValueError(f"method must be 'sorted' or 'growth', got {self.method!r}")
        self.config_ = SearchConfig(tau_shell=self.tau_shell, tau_tie=self.tau_tie,
                                    delta_witness=self.delta_witness,
                                    max_iterations=self.max_iterations, seed=self.seed)
        return self._fit_window(X)

    def find(self, center):
        check_is_fitted(self, "index_")
        finder = find_ball_sorted if self.method == "sorted" else find_ball_growth
        return finder(self.index_, self.norm_spec_, center, self.n, self.config_)

    def predict(self, X):
        centers = self._centers(X)
        self.certificates_ = [self.find(c) for c in centers]
        return np.array([c.radius for c in self.certificates_])


class SPrimeScanner(BaseEstimator):
    """Witness search for pairs of unit vectors.

    ``predict(X, Y)`` returns a boolean per row pair; witnesses (or
    ``NotFound`` records) of the last call are kept in ``results_``.
    """

    def __init__(self, norm="l2", delta=0.1, strategies=STRATEGIES, budget=20000, seed=0,
                 tau_sep=TAU_SEP, beta=None):
        self.norm = norm
        self.delta = delta
        self.strategies = strategies
        self.budget = budget
        self.seed = seed
        self.tau_sep = tau_sep
        self.beta = beta

    def fit(self, X=None, y=None, dim: Optional[int] = None):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if dim is None:
            dim = 3 if self.norm == "custom3d" else check_points(X).shape[1]
        self.norm_spec_ = check_norm(self.norm, dim, self.beta)
        self.n_features_in_ = self.norm_spec_.dim
        return self

    def predict(self, X, Y):
        check_is_fitted(self, "norm_spec_")
        X = check_points(X, self.n_features_in_)
        Y = check_points(Y, self.n_features_in_)
        if len(X) != len(Y):
            raise ValueError("X and Y must have the same number of rows")
        streams = np.random.SeedSequence(self.seed).spawn(len(X))
        self.results_ = [
            find_witness(self.norm_spec_, x, y, self.delta, self.strategies, self.budget,
                         np.random.default_rng(s), self.tau_sep)
            for x, y, s in zip(X, Y, streams)
        ]
        return np.array([r.found for r in self.results_], dtype=bool)
