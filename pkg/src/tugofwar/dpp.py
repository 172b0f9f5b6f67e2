"""Grids, running payoffs and the Dynamic Programming Principle solver.

The epsilon-game value solves the fixed point equation

    u(x) = 1/2 max_{B(x)} u + 1/2 min_{B(x)} u + f(x)     off Gamma_D,
    u(x) = 0                                              on Gamma_D,

where ``B(x)`` is the closed eps-ball around ``x`` intersected with the
closed domain.  On a grid the ball is replaced by the set of nodes within
distance ``eps``.  Two discretisations are provided:

``chain_1d``
    Cells of width ``eps`` on an interval, node 0 at the Dirichlet
    endpoint.  Neighbours are ``{k-1, k, k+1}``; this reproduces the
    one-dimensional recurrences exactly.
``lattice_2d``
    A square lattice of spacing ``h <= eps / 3`` plus boundary nodes.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from . import _csv

try:
    import numba

    _NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    _NUMBA_AVAILABLE = False
from .geometry import (
    DIRICHLET,
    Domain,
    DomainError,
    _as_points,
    _labels_at,
    _neumann_distance,
    _signed_boundary_distance,
    boundary_nodes,
)

CHAIN_1D = "chain_1d"
LATTICE_2D = "lattice_2d"

DEFAULT_TOL = {CHAIN_1D: 1e-14, LATTICE_2D: 1e-10}
DEFAULT_MAX_ITER = {CHAIN_1D: 10**6, LATTICE_2D: 10**5}


class GridError(ValueError):
    """Raised when grid parameters violate a precondition."""


@dataclass(eq=False)
class Grid:
    """Discrete state space of the game.

    ``representatives`` are the points at which the running payoff is
    evaluated.  They coincide with ``nodes`` on a lattice; in chain mode
    they are the cell midpoints so that only the last cell falls in the
    Neumann strip.
    """

    mode: str
    domain: Domain
    nodes: np.ndarray
    h: float
    eps: float
    dirichlet_mask: np.ndarray
    neighbors: list
    representatives: np.ndarray
    _table: np.ndarray | None = field(default=None, repr=False)
    _tree: cKDTree | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def table(self) -> np.ndarray:
        """Neighbour lists padded with the node itself, shape (n, max_degree)."""
        if self._table is None:
            width = max(len(nb) for nb in self.neighbors)
            table = np.empty((self.n_nodes, width), dtype=np.intp)
            for i, nb in enumerate(self.neighbors):
                table[i, : len(nb)] = nb
                table[i, len(nb):] = i
            self._table = table
        return self._table

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.nodes)
        return self._tree

    def nearest_node(self, x) -> np.ndarray:
        pts = _as_points(self.domain, x)
        return self.tree.query(pts)[1]

    def with_absorbing(self, mask) -> "Grid":
        """Copy of the grid with a different absorbing set."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n_nodes,):
            raise GridError("absorbing mask has the wrong length")
        return dataclasses.replace(self, dirichlet_mask=mask.copy())


@dataclass(frozen=True)
class RunningPayoff:
    """Running payoff ``f``: ``eps * g / 2`` in the strip, ``interior`` elsewhere.

    With ``additive=True`` the strip pays ``eps * g / 2 + interior`` (the
    one-dimensional ``full_payoff`` game).  ``strip`` selects the set the
    strip is measured from: ``"neumann"`` (distance to Gamma_N) or
    ``"boundary"`` (distance to the whole boundary, used by the first-stage
    comparison game).  ``g`` is a
    positive constant or a callable evaluated at the nearest Gamma_N point.
    """

    g: float | Callable = 1.0
    eps: float = 0.1
    interior: float = 0.0
    strip: str = "neumann"
    additive: bool = False

    @classmethod
    def running(cls, g, eps):
        """``eps * g / 2`` for ``d(x, Gamma_N) <= eps``, ``eps^3`` otherwise."""
        return cls(g=g, eps=eps, interior=eps ** 3)

    @classmethod
    def full_payoff(cls, g, eps):
        """``eps * g / 2`` on the strip plus ``eps^3`` everywhere."""
        return cls(g=g, eps=eps, interior=eps ** 3, additive=True)

    @classmethod
    def strip_only(cls, g, eps):
        return cls(g=g, eps=eps, interior=0.0)

    @classmethod
    def zero(cls, eps):
        """Homogeneous payoff, a test hook."""
        return cls(g=0.0, eps=eps, interior=0.0)

    @classmethod
    def first_stage(cls, K, eps):
        """``eps * K`` within ``eps`` of the whole boundary, ``eps^3`` elsewhere."""
        return cls(g=2.0 * K, eps=eps, interior=eps ** 3, strip="boundary")

    @classmethod
    def from_variant(cls, variant, g, eps):
        builders = {
            "running": cls.running,
            "full_payoff": cls.full_payoff,
            "strip_only": cls.strip_only,
            "zero": lambda g, eps: cls.zero(eps),
        }
        if variant not in builders:
            raise ValueError(f"unknown payoff variant {variant!r}")
        return builders[variant](g, eps)

    def g_values(self, points: np.ndarray) -> np.ndarray:
        if callable(self.g):
            return np.array([float(self.g(p)) for p in points])
        return np.full(len(points), float(self.g))

    def values(self, domain: Domain, points: np.ndarray) -> np.ndarray:
        """Vectorised payoff at points; Dirichlet points are not special-cased."""
        points = np.asarray(points, dtype=float)
        out = np.full(len(points), float(self.interior))
        if self.strip == "boundary":
            dist = np.maximum(_signed_boundary_distance(domain, points), 0.0)
            foot = points
        else:
            dist, foot = _neumann_distance(domain, points)
        in_strip = dist <= self.eps + domain.tol
        if in_strip.any():
            strip_value = self.eps * self.g_values(foot[in_strip]) / 2.0
            out[in_strip] = strip_value + self.interior if self.additive else strip_value
        return out


@dataclass(eq=False)
class ValueFunction:
    grid: Grid
    values: np.ndarray
    iterations: int
    residual: float
    converged: bool

    def evaluate(self, x) -> np.ndarray:
        """Nearest-node evaluation at one or many points."""
        return self.values[self.grid.nearest_node(x)]

    def __call__(self, x) -> float:
        return float(self.evaluate(x)[0])

    def to_csv(self, path=None) -> str:
        g = self.grid
        cols = ["node_index", "x"] + (["y"] if g.nodes.shape[1] == 2 else []) + ["value"]
        rows = [(i, *g.nodes[i], self.values[i]) for i in range(g.n_nodes)]
        meta = {
            "eps": g.eps,
            "h": g.h,
            "iterations": self.iterations,
            "residual": self.residual,
        }
        if path is None:
            return _csv.render(cols, rows, meta)
        return _csv.write(path, cols, rows, meta)


def _is_integer_ratio(length, eps):
    n = length / eps
    return abs(n - round(n)) <= 1e-9 * max(1.0, n), int(round(n))


def build_grid(domain: Domain, eps: float, h: float | None = None, mode: str | None = None) -> Grid:
    """Discretise ``domain`` for game step ``eps``.

    ``mode`` defaults to ``chain_1d`` for intervals and ``lattice_2d``
    otherwise.  ``h`` is ignored in chain mode and defaults to ``eps / 4``
    on a lattice.
    """
    if eps <= 0:
        raise GridError("eps must be positive")
    if mode is None:
        mode = CHAIN_1D if domain.kind == "interval" else LATTICE_2D
    if mode == CHAIN_1D:
        return _build_chain(domain, eps)
    if mode == LATTICE_2D:
        if h is None:
            h = eps / 4
        return _build_lattice(domain, eps, h)
    raise GridError(f"unknown grid mode {mode!r}")


def _build_chain(domain: Domain, eps: float) -> Grid:
    if domain.kind != "interval":
        raise GridError("chain_1d mode needs an interval domain")
    ok, n = _is_integer_ratio(domain.b - domain.a, eps)
    if not ok:
        raise GridError(f"eps: (b - a) / eps = {(domain.b - domain.a) / eps} is not an integer")
    left, right = domain.labels
    if left == DIRICHLET:
        origin, step = domain.a, eps
    else:
        origin, step = domain.b, -eps
    k = np.arange(n + 1)
    nodes = (origin + step * k)[:, None]
    nodes[-1, 0] = domain.b if step > 0 else domain.a
    reps = nodes.copy()
    reps[1:, 0] -= step / 2
    mask = np.zeros(n + 1, dtype=bool)
    mask[0] = True
    if left == right == DIRICHLET:
        mask[-1] = True
    neighbors = [np.arange(max(i - 1, 0), min(i + 1, n) + 1) for i in range(n + 1)]
    return Grid(CHAIN_1D, domain, nodes, eps, eps, mask, neighbors, reps)


def _build_lattice(domain: Domain, eps: float, h: float) -> Grid:
    if domain.dim != 2:
        raise GridError("lattice_2d mode needs a two-dimensional domain")
    if h <= 0 or h > eps / 3 * (1 + 1e-12):
        raise GridError(f"h: lattice spacing {h} must satisfy 0 < h <= eps/3")
    lo, hi = domain.bounding_box()
    axes = [lo[d] + h * np.arange(int(np.floor((hi[d] - lo[d]) / h + 1e-9)) + 1) for d in range(2)]
    xx, yy = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([xx.ravel(), yy.ravel()], axis=1)
    inner = lattice[_signed_boundary_distance(domain, lattice) > domain.tol]
    bnd = boundary_nodes(domain, h)
    nodes = np.concatenate([inner, bnd])
    mask = np.zeros(len(nodes), dtype=bool)
    mask[len(inner):] = _labels_at(domain, bnd) == DIRICHLET
    tree = cKDTree(nodes)
    nb = tree.query_ball_point(nodes, r=eps + domain.tol)
    neighbors = [np.array(sorted(lst), dtype=np.intp) for lst in nb]
    return Grid(LATTICE_2D, domain, nodes, h, eps, mask, neighbors, nodes, _tree=tree)


def payoff_vector(grid: Grid, payoff: RunningPayoff) -> np.ndarray:
    f = payoff.values(grid.domain, grid.representatives)
    f[grid.dirichlet_mask] = 0.0
    return f


def running_payoff_at(p: RunningPayoff, domain: Domain, x) -> float:
    """Running payoff at a single point off Gamma_D."""
    pts = _as_points(domain, x)
    sd = _signed_boundary_distance(domain, pts)[0]
    if sd < -domain.tol:
        raise DomainError("point lies outside the domain")
    if sd <= domain.tol and _labels_at(domain, pts)[0] == DIRICHLET:
        raise DomainError("no running payoff on the Dirichlet boundary")
    return float(p.values(domain, pts)[0])


def _sweep(table, f, absorbing, u):
    nb = u[table]
    v = 0.5 * (nb.max(axis=1) + nb.min(axis=1)) + f
    v[absorbing] = 0.0
    return v


def _sweep_into_py(table, f, absorbing, u, out):
    out[:] = _sweep(table, f, absorbing, u)
    return float(np.max(np.abs(out - u))) if len(u) else 0.0


if _NUMBA_AVAILABLE:

    @numba.njit(cache=True)
    def _sweep_into(table, f, absorbing, u, out):
        # reads only u, writes only out: a Jacobi sweep
        n, m = table.shape
        res = 0.0
        for i in range(n):
            if absorbing[i]:
                out[i] = 0.0
            else:
                hi = u[table[i, 0]]
                lo = hi
                for j in range(1, m):
                    val = u[table[i, j]]
                    if val > hi:
                        hi = val
                    elif val < lo:
                        lo = val
                out[i] = 0.5 * (hi + lo) + f[i]
            d = abs(out[i] - u[i])
            if d > res:
                res = d
        return res

else:  # pragma: no cover
    _sweep_into = _sweep_into_py


def dpp_operator(grid: Grid, payoff: RunningPayoff, u) -> np.ndarray:
    """One application of the DPP map ``T``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_nodes,):
        raise GridError(f"expected {grid.n_nodes} values, got shape {u.shape}")
    return _sweep(grid.table, payoff_vector(grid, payoff), grid.dirichlet_mask, u)


def solve_dpp(
    grid: Grid,
    payoff: RunningPayoff,
    tol: float | None = None,
    max_iter: int | None = None,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> ValueFunction:
    """Jacobi value iteration from ``u = 0``.

    Stops when the sup-norm of the update is at most ``tol`` or after
    ``max_iter`` sweeps; in the latter case ``converged`` is False.
    ``callback(n, u)`` is called with every iterate, ``u^0`` included.
    """
    tol = DEFAULT_TOL[grid.mode] if tol is None else tol
    max_iter = DEFAULT_MAX_ITER[grid.mode] if max_iter is None else max_iter
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    table, mask = grid.table, grid.dirichlet_mask
    f = payoff_vector(grid, payoff)
    u = np.zeros(grid.n_nodes)
    v = np.empty_like(u)
    if callback is not None:
        callback(0, u.copy())
    residual = np.inf
    n = 0
    while n < max_iter:
        residual = float(_sweep_into(table, f, mask, u, v))
        u, v = v, u
        n += 1
        if callback is not None:
            callback(n, u.copy())
        if residual <= tol:
            break
    return ValueFunction(grid, u, n, residual, residual <= tol)
