"""Scikit-learn style wrappers around the solver and the Monte Carlo estimator.

``fit`` takes the sample points ``X`` only for API symmetry; the grid comes
from the domain and ``eps``.  ``predict`` evaluates at the nearest node.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dpp import RunningPayoff, build_grid, solve_dpp
from .game import PLAYER_I, PLAYER_II, estimate_value, greedy_strategy, optimal_strategy_1d


class TugOfWarSolver(RegressorMixin, BaseEstimator):
    """Fixed point of the game recursion on a discretised domain.

    Parameters
    ----------
    domain : Domain
    g : float or callable
        Neumann data.
    eps : float
        Game step.
    h : float, optional
        Lattice spacing; ignored in chain mode.
    variant : str
        Payoff variant, see :meth:`RunningPayoff.from_variant`.
    tol, max_iter : optional
        Solver controls; defaults depend on the grid mode.
    """

    def __init__(self, domain=None, g=1.0, eps=0.1, h=None, variant="running", tol=None, max_iter=None):
        self.domain = domain
        self.g = g
        self.eps = eps
        self.h = h
        self.variant = variant
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        if self.domain is None:
            raise ValueError("domain is required")
        self.grid_ = build_grid(self.domain, self.eps, self.h)
        self.payoff_ = RunningPayoff.from_variant(self.variant, self.g, self.eps)
        self.value_ = solve_dpp(self.grid_, self.payoff_, self.tol, self.max_iter)
        self.n_iter_ = self.value_.iterations
        self.residual_ = self.value_.residual
        self.converged_ = self.value_.converged
        self.n_features_in_ = self.domain.dim
        return self

    def predict(self, X):
        check_is_fitted(self, "value_")
        X = check_array(X, ensure_min_features=self.n_features_in_)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.value_.evaluate(X)


class MonteCarloValue(BaseEstimator):
    """Monte Carlo game value at given start points.

    Strategies are the explicit 1-D ones in chain mode and greedy with
    respect to a fitted :class:`TugOfWarSolver` otherwise.
    """

    def __init__(self, solver=None, episodes=10000, seed=0, max_steps=10**6, n_jobs=1):
        self.solver = solver
        self.episodes = episodes
        self.seed = seed
        self.max_steps = max_steps
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        if self.solver is None:
            raise ValueError("solver is required")
        check_is_fitted(self.solver, "value_")
        grid = self.solver.grid_
        if grid.mode == "chain_1d":
            self.strategies_ = (optimal_strategy_1d(PLAYER_I, grid), optimal_strategy_1d(PLAYER_II, grid))
        else:
            v = self.solver.value_
            self.strategies_ = (greedy_strategy(v, PLAYER_I), greedy_strategy(v, PLAYER_II))
        return self

    def predict(self, X):
        """Estimates for each row of ``X``; returns ``(mean, std_error)`` arrays."""
        check_is_fitted(self, "strategies_")
        X = check_array(X)
        s = self.solver
        est = [
            estimate_value(s.grid_, s.payoff_, *self.strategies_, x, self.episodes, self.seed,
                           self.max_steps, self.n_jobs)
            for x in X
        ]
        return np.array([e.mean for e in est]), np.array([e.std_error for e in est])
