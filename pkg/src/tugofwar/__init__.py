"""Numerical tools for the epsilon tug-of-war game with mixed boundary data.

The value of the game solves a dynamic programming fixed point on a
discretised domain; as the step shrinks it approximates an infinity
harmonic function with Dirichlet and Neumann boundary conditions.
"""
from .analysis import (
    AnalysisError,
    AnalysisReport,
    BarrierParams,
    ModulusParams,
    barrier_value,
    check_supersolution,
    convergence_study,
    first_stage_value,
    infinity_laplacian_residual,
    lipschitz_constant,
    lipschitz_report,
    modulus_check,
    neumann_residual,
)
from .config import ConfigError, load_config, parse_config
from .dpp import Grid, GridError, RunningPayoff, ValueFunction, build_grid, dpp_operator, solve_dpp
from .estimators import MonteCarloValue, TugOfWarSolver
from .game import (
    PLAYER_I,
    PLAYER_II,
    MCEstimate,
    Strategy,
    coin_tosses,
    estimate_value,
    greedy_strategy,
    optimal_strategy_1d,
    play_episode,
)
from .geometry import (
    DIRICHLET,
    NEUMANN,
    BoundaryPoint,
    Domain,
    DomainError,
    boundary_label,
    boundary_sample,
    contains,
    dist_to_boundary,
    dist_to_neumann,
    transversality_constant,
)
from .oracle import Oracle1DParams, check_recurrences, oracle_values

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "AnalysisReport",
    "BarrierParams",
    "ModulusParams",
    "barrier_value",
    "check_supersolution",
    "convergence_study",
    "first_stage_value",
    "infinity_laplacian_residual",
    "lipschitz_constant",
    "lipschitz_report",
    "modulus_check",
    "neumann_residual",
    "ConfigError",
    "load_config",
    "parse_config",
    "Grid",
    "GridError",
    "RunningPayoff",
    "ValueFunction",
    "build_grid",
    "dpp_operator",
    "solve_dpp",
    "MonteCarloValue",
    "TugOfWarSolver",
    "PLAYER_I",
    "PLAYER_II",
    "MCEstimate",
    "Strategy",
    "coin_tosses",
    "estimate_value",
    "greedy_strategy",
    "optimal_strategy_1d",
    "play_episode",
    "DIRICHLET",
    "NEUMANN",
    "BoundaryPoint",
    "Domain",
    "DomainError",
    "boundary_label",
    "boundary_sample",
    "contains",
    "dist_to_boundary",
    "dist_to_neumann",
    "transversality_constant",
    "Oracle1DParams",
    "check_recurrences",
    "oracle_values",
]
