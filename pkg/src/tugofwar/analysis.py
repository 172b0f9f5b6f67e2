"""Numerical checks of the estimates behind the epsilon -> 0 limit.

* barrier supersolution ``eps + C1 |x - x0| - C2 eps |x - x0|^2`` for the
  first-stage comparison game, and the resulting Lipschitz-type bound;
* separated-pair Lipschitz constants and the modulus-of-continuity
  hypothesis of the compactness lemma for discontinuous families;
* finite-difference residuals of the infinity Laplacian and of the
  Neumann condition;
* convergence studies over a list of ``eps``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _csv
from .dpp import (
    CHAIN_1D,
    Grid,
    RunningPayoff,
    ValueFunction,
    build_grid,
    payoff_vector,
    solve_dpp,
)
from .geometry import (
    NEUMANN,
    BoundaryPoint,
    Domain,
    DomainError,
    _signed_boundary_distance,
    boundary_sample,
    contains,
    dist_to_boundary,
)


class AnalysisError(ValueError):
    pass


@dataclass
class AnalysisReport:
    """Outcome of one check.

    ``margin`` is the worst value of the check's slack (nonnegative iff the
    check holds) and ``location`` the point where it is attained.
    """

    name: str
    passed: bool
    margin: float
    location: np.ndarray | None = None
    params: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_record(self) -> str:
        loc = "" if self.location is None else "(" + " ".join(_csv.fmt(v) for v in np.ravel(self.location)) + ")"
        parts = [
            f"name={self.name}",
            f"pass={'true' if self.passed else 'false'}",
            f"margin={_csv.fmt(self.margin)}",
            f"location={loc}",
        ]
        parts += [f"{k}={_csv.fmt(v)}" for k, v in {**self.params, **self.measured}.items()]
        return " ".join(parts)


def write_reports(reports, path) -> str:
    text = "".join(r.to_record() + "\n" for r in reports)
    with open(path, "w") as fh:
        fh.write(text)
    return text


# -- barrier -------------------------------------------------------------------
@dataclass(frozen=True)
class BarrierParams:
    x0: np.ndarray
    K: float
    c: float
    eps: float
    C2: float = 1.0

    def __post_init__(self):
        if not self.K > 0:
            raise AnalysisError("K must be positive")
        if not 0 < self.c < 1:
            raise AnalysisError(f"transversality constant c={self.c} must lie in (0, 1)")
        if self.C2 < 1:
            raise AnalysisError("C2 must be at least 1")
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))

    @property
    def C1(self) -> float:
        return 4.0 * self.K / (1.0 - self.c)

    @property
    def lipschitz_bound(self) -> float:
        """Slope of the bound ``v(y) <= (C1 + 1) |y - x0|`` for ``|y - x0| > eps``."""
        return self.C1 + 1.0

    def radial(self, r):
        return self.eps + self.C1 * r - self.C2 * self.eps * r ** 2


def barrier_value(p: BarrierParams, x) -> float:
    r = np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float)) - p.x0)
    return float(p.radial(r))


def _reach(domain: Domain, x: np.ndarray, x0: np.ndarray, eps: float):
    """Range [dmin, dmax] of |z - x0| over the closed eps-ball at x within the domain."""
    r = float(np.linalg.norm(x - x0))
    dmin = max(r - eps, 0.0)
    if domain.kind == "interval":
        lo, hi = max(x[0] - eps, domain.a), min(x[0] + eps, domain.b)
        return dmin, max(abs(lo - x0[0]), abs(hi - x0[0]))
    u = (x - x0) / r if r > 0 else np.array([1.0, 0.0])
    far = x + eps * u
    if r > 0 and _signed_boundary_distance(domain, far[None])[0] >= -domain.tol:
        return dmin, r + eps
    cands = [r]
    if domain.kind == "disk":
        c, R = domain.center, domain.radius
        w = c - x0
        nw = np.linalg.norm(w)
        z = c + R * (w / nw if nw > 0 else u)
        if np.linalg.norm(z - x) <= eps + domain.tol:
            cands.append(np.linalg.norm(z - x0))
        cands += [np.linalg.norm(p - x0) for p in _circle_circle(x, eps, c, R)]
    else:
        p, q, _, _ = domain._edges()
        for v in p:
            if np.linalg.norm(v - x) <= eps + domain.tol:
                cands.append(np.linalg.norm(v - x0))
        for a, b in zip(p, q):
            cands += [np.linalg.norm(z - x0) for z in _circle_segment(x, eps, a, b)]
    return dmin, float(max(cands))


def _circle_circle(c1, r1, c2, r2):
    d = np.linalg.norm(c2 - c1)
    if d == 0 or d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (r1 ** 2 - r2 ** 2 + d ** 2) / (2 * d)
    hh = max(r1 ** 2 - a ** 2, 0.0)
    m = c1 + a * (c2 - c1) / d
    perp = np.array([-(c2 - c1)[1], (c2 - c1)[0]]) / d
    return [m + np.sqrt(hh) * perp, m - np.sqrt(hh) * perp]


def _circle_segment(c, r, a, b):
    e = b - a
    w = a - c
    A, B, C = e @ e, 2 * (w @ e), w @ w - r * r
    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    s = np.sqrt(disc)
    return [a + t * e for t in ((-B - s) / (2 * A), (-B + s) / (2 * A)) if 0.0 <= t <= 1.0]


def supersolution_margin(p: BarrierParams, domain: Domain, x, f: float) -> float:
    """``vbar(x) - (sup + inf) / 2 - f`` with sup/inf over the exact eps-ball in the domain."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dmin, dmax = _reach(domain, x, p.x0, p.eps)
    vertex = p.C1 / (2 * p.C2 * p.eps)
    sup = p.radial(min(max(vertex, dmin), dmax))
    inf = min(p.radial(dmin), p.radial(dmax))
    return float(p.radial(np.linalg.norm(x - p.x0)) - 0.5 * (sup + inf) - f)


def measured_barrier_params(domain: Domain, x0, K: float, eps: float, samples: int = 4096, C2: float = 1.0):
    from .geometry import transversality_constant

    c = transversality_constant(domain, x0, samples)
    return BarrierParams(np.asarray(x0, dtype=float), K, c, eps, C2)


def check_supersolution(
    p: BarrierParams,
    grid: Grid,
    payoff: RunningPayoff | None = None,
    ball: str = "exact",
    rtol: float = 1e-12,
) -> AnalysisReport:
    """Check ``vbar >= (sup vbar + inf vbar) / 2 + f`` at separated nodes.

    Nodes checked are the non-absorbing ones with ``|x - x0| > eps``.  With
    ``ball="exact"`` sup and inf are taken over the closed eps-ball
    intersected with the domain (vbar is radial, so these are exact); with
    ``ball="nodes"`` over the grid neighbours.  ``payoff`` defaults to the
    first-stage payoff ``eps K`` near the boundary, ``eps^3`` elsewhere.
    A margin above ``-rtol * max(1, vbar)`` counts as nonnegative.
    """
    if payoff is None:
        payoff = RunningPayoff.first_stage(p.K, p.eps)
    f = payoff_vector(grid, payoff)
    r = np.linalg.norm(grid.nodes - p.x0, axis=1)
    check = (~grid.dirichlet_mask) & (r > p.eps + grid.domain.tol)
    idx = np.flatnonzero(check)
    vbar = p.radial(r)
    if ball == "nodes":
        nb = vbar[grid.table[idx]]
        margins = vbar[idx] - 0.5 * (nb.max(axis=1) + nb.min(axis=1)) - f[idx]
    elif ball == "exact":
        margins = np.array([supersolution_margin(p, grid.domain, grid.nodes[i], f[i]) for i in idx])
    else:
        raise AnalysisError(f"unknown ball mode {ball!r}")
    slack = margins + rtol * np.maximum(1.0, vbar[idx])
    worst = int(np.argmin(slack)) if len(idx) else None
    failures = [(int(idx[j]), float(margins[j])) for j in np.flatnonzero(slack < 0)]
    params = {"K": p.K, "c": p.c, "C1": p.C1, "C2": p.C2, "eps": p.eps, "ball": ball}
    if worst is None:
        return AnalysisReport("supersolution", True, np.inf, None, params)
    return AnalysisReport(
        "supersolution",
        not failures,
        float(margins[worst]),
        grid.nodes[idx[worst]],
        params,
        {"nodes_checked": len(idx), "nodes_failed": len(failures)},
        failures,
    )


def first_stage_value(grid: Grid, K: float, x0, include_dirichlet: bool = False, **solver_kw) -> ValueFunction:
    """Value of the comparison game that ends when the token reaches ``x0``."""
    target = int(grid.nearest_node(x0)[0])
    mask = np.zeros(grid.n_nodes, dtype=bool)
    mask[target] = True
    if include_dirichlet:
        mask |= grid.dirichlet_mask
    return solve_dpp(grid.with_absorbing(mask), RunningPayoff.first_stage(K, grid.eps), **solver_kw)


def barrier_bound_report(v: ValueFunction, p: BarrierParams) -> AnalysisReport:
    """``v(y) <= (C1 + 1) |y - x0|`` at nodes with ``|y - x0| > eps``."""
    r = np.linalg.norm(v.grid.nodes - p.x0, axis=1)
    sel = np.flatnonzero(r > p.eps)
    slack = p.lipschitz_bound * r[sel] - v.values[sel]
    j = int(np.argmin(slack))
    return AnalysisReport(
        "barrier_bound",
        bool(slack[j] >= 0),
        float(slack[j]),
        v.grid.nodes[sel[j]],
        {"K": p.K, "c": p.c, "bound_slope": p.lipschitz_bound},
        {"max_ratio": float(np.max(v.values[sel] / r[sel]))},
    )


# -- pairwise scans ---------------------------------------------------------------
def _pairwise_scan(nodes, values, separation, fn, chunk=256):
    """Reduce ``fn(dist, |du|)`` over pairs with ``dist > separation``.

    ``fn`` returns a per-pair score; the minimum score and its pair are
    returned (ties broken by lowest row then column index).
    """
    best, where = np.inf, None
    n = len(nodes)
    for s in range(0, n, chunk):
        e = min(s + chunk, n)
        d = np.linalg.norm(nodes[s:e, None, :] - nodes[None, :, :], axis=-1)
        du = np.abs(values[s:e, None] - values[None, :])
        mask = d > separation
        if not mask.any():
            continue
        score = np.where(mask, fn(np.where(mask, d, 1.0), du), np.inf)
        k = int(np.argmin(score))
        i, j = divmod(k, n)
        if score[i, j] < best:
            best, where = float(score[i, j]), (s + i, j)
    return best, where


def lipschitz_constant(u: ValueFunction, separation: float) -> tuple[float, tuple | None]:
    """``max |u(x) - u(y)| / |x - y|`` over node pairs with ``|x - y| > separation``."""
    best, pair = _pairwise_scan(u.grid.nodes, u.values, separation, lambda d, du: -du / d)
    if pair is None:
        raise AnalysisError(f"no node pairs farther apart than {separation}")
    return -best, pair


def lipschitz_report(
    u: ValueFunction,
    separation: float | None = None,
    bound: float | None = None,
    barrier: BarrierParams | None = None,
) -> AnalysisReport:
    """Measured separated-pair Lipschitz constant, compared with a bound if given.

    The bound is ``bound`` or, from ``barrier``, ``4K/(1-c) + 1``.  With no
    bound the report is informational and passes.
    """
    separation = u.grid.eps if separation is None else separation
    if separation < u.grid.eps * (1 - 1e-12):
        raise AnalysisError("separation must be at least eps")
    L, (i, j) = lipschitz_constant(u, separation)
    if bound is None and barrier is not None:
        bound = barrier.lipschitz_bound
    passed = True if bound is None else bool(L <= bound * (1 + 1e-12))
    margin = np.inf if bound is None else float(bound - L)
    return AnalysisReport(
        "lipschitz",
        passed,
        margin,
        u.grid.nodes[i],
        {"separation": separation, "bound": np.nan if bound is None else bound},
        {"L": L, "pair": f"{i}-{j}"},
    )


@dataclass(frozen=True)
class ModulusParams:
    """Separation ``a_eps`` and modulus ``omega`` (default ``slope * s``)."""

    a_eps: float
    slope: float | None = None
    omega: Callable | None = None
    bound: float = np.inf

    def __post_init__(self):
        if self.omega is None and self.slope is None:
            raise AnalysisError("give either omega or slope")
        if self.slope is not None and self.slope < 0:
            raise AnalysisError("modulus slope must be nonnegative")

    def evaluate(self, s):
        if self.omega is not None:
            return self.omega(s)
        return self.slope * s


def modulus_check(u: ValueFunction, m: ModulusParams, atol: float = 1e-12) -> AnalysisReport:
    """Uniform bound ``|u| <= bound`` and ``|u(x)-u(y)| <= omega(|x-y|)`` for ``|x-y| > a_eps``."""
    sup = float(np.max(np.abs(u.values))) if len(u.values) else 0.0
    best, pair = _pairwise_scan(u.grid.nodes, u.values, m.a_eps, lambda d, du: m.evaluate(d) - du)
    bound_ok = sup <= m.bound
    mod_ok = pair is None or best >= -atol
    margin = min(best if pair is not None else np.inf, m.bound - sup)
    loc = None if pair is None else u.grid.nodes[pair[0]]
    return AnalysisReport(
        "modulus",
        bool(bound_ok and mod_ok),
        float(margin),
        loc,
        {"a_eps": m.a_eps, "slope": np.nan if m.slope is None else m.slope, "bound": m.bound},
        {"sup_abs_u": sup, "pairs_checked": pair is not None},
    )


# -- finite-difference residuals ---------------------------------------------------
def infinity_laplacian_residual(u_eval: Callable, x, h_fd: float, domain: Domain | None = None) -> float:
    """Normalised infinity Laplacian of ``u`` at ``x`` by finite differences.

    Second difference along the unit central-difference gradient; where the
    gradient is below 1e-8 the largest ``2 (u(x + h e) - u(x)) / h^2`` over
    coordinate directions ``+-e`` is returned instead.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if domain is not None:
        if not contains(domain, x) or dist_to_boundary(domain, x) <= h_fd:
            raise DomainError(f"x must be at distance > h_fd = {h_fd} from the boundary")
    dim = len(x)
    u0 = float(u_eval(x))
    eye = np.eye(dim)
    grad = np.array([(float(u_eval(x + h_fd * e)) - float(u_eval(x - h_fd * e))) / (2 * h_fd) for e in eye])
    norm = np.linalg.norm(grad)
    if norm > 1e-8:
        gdir = grad / norm
        return (float(u_eval(x + h_fd * gdir)) - 2 * u0 + float(u_eval(x - h_fd * gdir))) / h_fd ** 2
    probes = [2 * (float(u_eval(x + s * h_fd * e)) - u0) / h_fd ** 2 for e in eye for s in (1, -1)]
    return float(max(probes))


def neumann_residual(u_eval: Callable, bp: BoundaryPoint, g, h_fd: float, domain: Domain | None = None) -> float:
    """One-sided inward difference quotient minus ``g`` at a Neumann point."""
    if bp.label != NEUMANN:
        raise AnalysisError("neumann_residual needs a Neumann boundary point")
    pos = np.atleast_1d(np.asarray(bp.position, dtype=float))
    probe = pos - h_fd * np.atleast_1d(bp.normal)
    if domain is not None and not contains(domain, probe):
        raise DomainError("inward probe leaves the domain")
    gval = float(g(pos)) if callable(g) else float(g)
    return (float(u_eval(pos)) - float(u_eval(probe))) / h_fd - gval


# -- two-leg estimate -----------------------------------------------------------------
def waypoint(domain: Domain, x0, y0, eps: float) -> np.ndarray:
    """Interior point on the ray from the centroid towards the midpoint of x0, y0.

    It is the farthest such point whose boundary distance is at least
    ``max(0.25 |x0 - y0|, 2 eps)``, or the centroid if none qualifies.
    """
    x0, y0 = np.asarray(x0, dtype=float), np.asarray(y0, dtype=float)
    target = max(0.25 * np.linalg.norm(x0 - y0), 2 * eps)
    c = domain.centroid()
    mid = (x0 + y0) / 2

    def depth(t):
        return _signed_boundary_distance(domain, (c + t * (mid - c))[None])[0]

    if depth(0.0) < target:
        return c
    if depth(1.0) >= target:
        return mid
    lo, hi = 0.0, 1.0
    for _ in range(60):
        t = (lo + hi) / 2
        lo, hi = (t, hi) if depth(t) >= target else (lo, t)
    return c + lo * (mid - c)


def two_leg_report(u: ValueFunction, pairs, eps: float | None = None) -> AnalysisReport:
    """Empirical constant of the two-leg bound through a waypoint.

    For each pair ``(x0, y0)`` the ratio
    ``(|u(y0) - u(x1)| + |u(x1) - u(x0)|) / |x0 - y0|`` is computed and the
    largest ratio reported; no specific constant is asserted.
    """
    eps = u.grid.eps if eps is None else eps
    worst, where, direct = 0.0, None, 0.0
    for x0, y0 in pairs:
        x1 = waypoint(u.grid.domain, x0, y0, eps)
        d = np.linalg.norm(np.asarray(x0) - np.asarray(y0))
        ux0, uy0, ux1 = u(x0), u(y0), u(x1)
        ratio = (abs(uy0 - ux1) + abs(ux1 - ux0)) / d
        direct = max(direct, abs(uy0 - ux0) / d)
        if ratio >= worst:
            worst, where = ratio, np.asarray(x0, dtype=float)
    return AnalysisReport(
        "two_leg",
        bool(direct <= worst + 1e-12),
        float(worst - direct),
        where,
        {"eps": eps, "pairs": len(pairs)},
        {"C": worst, "direct": direct},
    )


# -- convergence study ---------------------------------------------------------------
@dataclass
class StudyRow:
    eps: float
    h: float
    n_nodes: int
    iterations: int
    converged: bool
    sup_u: float
    lipschitz: float
    gap: float
    bound: float
    interior_residual: float
    neumann_residual: float


STUDY_COLUMNS = [
    "eps", "h", "n_nodes", "iterations", "converged", "sup_u", "lipschitz",
    "gap", "bound", "interior_residual", "neumann_residual",
]


@dataclass
class StudyResult:
    rows: list
    values: list = field(default_factory=list, repr=False)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])

    def to_csv(self, path=None) -> str:
        rows = [[getattr(r, c) for c in STUDY_COLUMNS] for r in self.rows]
        if path is None:
            return _csv.render(STUDY_COLUMNS, rows)
        return _csv.write(path, STUDY_COLUMNS, rows)


def residual_summaries(u: ValueFunction, g, h_fd: float):
    """Median absolute interior and Neumann residuals of ``u`` at step ``h_fd``."""
    dom = u.grid.domain
    nodes = u.grid.nodes
    depth = _signed_boundary_distance(dom, nodes)
    interior = nodes[depth > h_fd * 1.5]
    ilap = [abs(infinity_laplacian_residual(u, x, h_fd)) for x in interior]
    nres = []
    if dom.kind == "interval":
        bps = boundary_sample(dom, 4)
    else:
        bps = boundary_sample(dom, max(16, int(dom.perimeter() / u.grid.h)))
    for bp in bps:
        if bp.label != NEUMANN:
            continue
        try:
            nres.append(abs(neumann_residual(u, bp, g, h_fd, dom)))
        except DomainError:
            continue
    med = float(np.median(ilap)) if ilap else np.nan
    return med, (float(np.median(nres)) if nres else np.nan)


def convergence_study(
    domain: Domain,
    g,
    eps_list,
    h_rule: Callable[[float], float] | None = None,
    variant: str | None = None,
    tol: float | None = None,
    max_iter: int | None = None,
) -> StudyResult:
    """Solve for each ``eps`` and tabulate distances to the limit.

    On an interval the gap is ``sup |u_eps - g(b) x|`` at the chain nodes
    with bound ``4 eps``; in 2-D it is the sup-difference between successive
    solutions, evaluated by nearest node at the nodes of the first grid.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise AnalysisError("eps_list must be strictly decreasing")
    if variant is None:
        variant = "full_payoff" if domain.kind == "interval" else "running"
    h_rule = h_rule or (lambda e: e / 4)
    rows, values = [], []
    probe_pts = None
    prev = None
    for eps in eps_list:
        grid = build_grid(domain, eps, h_rule(eps))
        u = solve_dpp(grid, RunningPayoff.from_variant(variant, g, eps), tol=tol, max_iter=max_iter)
        values.append(u)
        L = lipschitz_constant(u, eps)[0] if grid.n_nodes > 1 else 0.0
        if grid.mode == CHAIN_1D:
            g1 = float(g(np.array([domain.b]))) if callable(g) else float(g)
            x = np.abs(grid.nodes[:, 0] - grid.nodes[0, 0])
            gap = float(np.max(np.abs(u.values - g1 * x)))
            bound = 4 * eps
            h_fd = 2 * grid.h
        else:
            if probe_pts is None:
                probe_pts = grid.nodes
            cur = u.evaluate(probe_pts)
            gap = np.nan if prev is None else float(np.max(np.abs(cur - prev)))
            prev = cur
            bound = np.nan
            h_fd = 2 * grid.h
        ires, nres = residual_summaries(u, g, h_fd)
        rows.append(
            StudyRow(eps, grid.h, grid.n_nodes, u.iterations, u.converged, float(u.values.max()),
                     float(L), gap, bound, ires, nres)
        )
    return StudyResult(rows, values)
