import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tugofwar import (
    NEUMANN,
    AnalysisError,
    AnalysisReport,
    BarrierParams,
    Domain,
    DomainError,
    ModulusParams,
    RunningPayoff,
    ValueFunction,
    barrier_value,
    boundary_sample,
    build_grid,
    check_supersolution,
    convergence_study,
    first_stage_value,
    infinity_laplacian_residual,
    lipschitz_constant,
    lipschitz_report,
    modulus_check,
    neumann_residual,
    solve_dpp,
    transversality_constant,
)
from tugofwar.analysis import (
    barrier_bound_report,
    measured_barrier_params,
    supersolution_margin,
    two_leg_report,
    waypoint,
    write_reports,
)
from tugofwar.geometry import BoundaryPoint, _signed_boundary_distance


@pytest.fixture(scope="module")
def chain_strip(unit_interval):
    return solve_dpp(build_grid(unit_interval, 0.1), RunningPayoff.strip_only(1.0, 0.1))


# -- barrier -----------------------------------------------------------------------
def test_barrier_value_examples():
    p = BarrierParams((0.0, 0.0), 1.0, 0.5, 0.1)
    assert p.C1 == 8.0
    assert p.C1 * (1 - p.c) / 4 == p.K
    assert barrier_value(p, (0.0, 0.0)) == pytest.approx(0.1)
    assert barrier_value(p, (0.3, 0.4)) == pytest.approx(4.075)


@pytest.mark.parametrize("kw", [dict(K=0.0), dict(c=1.0), dict(c=0.0), dict(c=-0.2), dict(C2=0.5)])
def test_barrier_params_validation(kw):
    args = dict(x0=(0.0, 0.0), K=1.0, c=0.5, eps=0.1)
    args.update(kw)
    with pytest.raises(AnalysisError):
        BarrierParams(**args)


def test_disk_center_has_no_barrier(disk):
    # the transversality constant at the centre is 1, so C1 is undefined
    with pytest.raises(AnalysisError):
        measured_barrier_params(disk, (0.0, 0.0), 1.0, 0.05)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 0.7), st.floats(0.01, 0.1), st.floats(1.0, 3.0))
def test_interior_margin_is_c2_minus_one_eps_cubed(x, eps, C2):
    # away from the boundary the quadratic terms telescope
    dom = Domain.interval(0.0, 1.0)
    p = BarrierParams((0.0,), 1.0, 0.5, eps, C2)
    if x - eps <= eps:
        return
    m = supersolution_margin(p, dom, (x,), eps ** 3)
    assert m == pytest.approx((C2 - 1) * eps ** 3, abs=1e-12)


def test_supersolution_failures_sit_in_the_strip(disk):
    grid = build_grid(disk, 0.2, 0.2 / 3)
    p = BarrierParams((0.0, 0.0), 10.0, 0.5, 0.2)
    rep = check_supersolution(p, grid)
    assert not rep.passed and rep.failures
    assert rep.margin < 0 and rep.location is not None
    depth = _signed_boundary_distance(disk, grid.nodes[[i for i, _ in rep.failures]])
    assert np.all(depth <= 0.2 + 1e-12)
    assert "nodes_failed" in rep.measured


def test_supersolution_interior_nodes_pass(disk):
    grid = build_grid(disk, 0.2, 0.2 / 3)
    p = BarrierParams((0.0, 0.0), 1.0, 0.9, 0.2, C2=1.0)
    rep = check_supersolution(p, grid)
    failed = {i for i, _ in rep.failures}
    deep = np.flatnonzero(_signed_boundary_distance(disk, grid.nodes) > 0.2 + 1e-9)
    far = deep[np.linalg.norm(grid.nodes[deep], axis=1) > 0.2]
    assert far.size and not failed.intersection(far.tolist())


def test_supersolution_unknown_ball(disk):
    grid = build_grid(disk, 0.2, 0.2 / 3)
    with pytest.raises(AnalysisError):
        check_supersolution(BarrierParams((0.0, 0.0), 1.0, 0.5, 0.2), grid, ball="sphere")


def test_first_stage_bound(disk):
    grid = build_grid(disk, 0.2, 0.2 / 3)
    x0 = (0.3, 0.0)
    p = BarrierParams(x0, 1.0, transversality_constant(disk, x0, 1024), 0.2)
    v = first_stage_value(grid, p.K, x0)
    assert v.converged
    assert v(x0) == 0.0
    rep = barrier_bound_report(v, p)
    assert rep.passed and rep.margin >= 0


# -- Lipschitz and modulus ------------------------------------------------------------
def test_lipschitz_chain(chain_strip):
    L, pair = lipschitz_constant(chain_strip, 0.1)
    assert L <= 2.0
    assert L == pytest.approx(1.0, abs=1e-10)
    rep = lipschitz_report(chain_strip, bound=2.0)
    assert rep.passed and rep.margin == pytest.approx(1.0, abs=1e-10)


def test_lipschitz_of_zero(unit_interval):
    grid = build_grid(unit_interval, 0.1)
    u = ValueFunction(grid, np.zeros(grid.n_nodes), 1, 0.0, True)
    assert lipschitz_constant(u, 0.1)[0] == 0.0


def test_lipschitz_errors(unit_interval, chain_strip):
    with pytest.raises(AnalysisError):
        lipschitz_report(chain_strip, separation=0.05)
    with pytest.raises(AnalysisError):
        lipschitz_constant(chain_strip, 5.0)


def test_lipschitz_against_barrier(chain_strip):
    rep = lipschitz_report(chain_strip, barrier=BarrierParams((0.0,), 0.5, 0.5, 0.1))
    assert rep.params["bound"] == 5.0 and rep.passed


def test_modulus_examples(unit_interval, chain_strip):
    assert modulus_check(chain_strip, ModulusParams(0.1, slope=2.0)).passed
    grid = chain_strip.grid
    const = ValueFunction(grid, np.full(grid.n_nodes, 3.0), 1, 0.0, True)
    assert modulus_check(const, ModulusParams(0.1, slope=0.0)).passed
    step = ValueFunction(grid, (np.arange(grid.n_nodes) >= 5).astype(float), 1, 0.0, True)
    # the jump between adjacent nodes is filtered out only when spacing <= a_eps
    assert not modulus_check(step, ModulusParams(0.05, slope=1.0)).passed
    assert modulus_check(step, ModulusParams(0.2, omega=lambda s: 5.0 * s)).passed
    assert not modulus_check(step, ModulusParams(0.2, slope=5.0, bound=0.5)).passed


def test_modulus_params_validation():
    with pytest.raises(AnalysisError):
        ModulusParams(0.1)
    with pytest.raises(AnalysisError):
        ModulusParams(0.1, slope=-1.0)


# -- residuals ---------------------------------------------------------------------------
def test_infinity_laplacian_examples():
    lin = lambda x: 2.0 * x[0] - 3.0 * x[1] + 1.0  # noqa: E731
    cone = lambda x: np.linalg.norm(x - np.array([0.2, -0.1]))  # noqa: E731
    quad = lambda x: 0.5 * float(x @ x)  # noqa: E731
    assert abs(infinity_laplacian_residual(lin, (0.3, 0.4), 1e-3)) <= 1e-6
    assert abs(infinity_laplacian_residual(cone, (0.5, 0.5), 1e-3)) <= 1e-5
    assert infinity_laplacian_residual(quad, (1.0, 0.0), 1e-3) == pytest.approx(1.0, abs=1e-6)


def test_infinity_laplacian_degenerate_branch():
    quad = lambda x: float(x @ x)  # noqa: E731
    # zero gradient at the origin: 2 (u(h e) - u(0)) / h^2 = 2
    assert infinity_laplacian_residual(quad, (0.0, 0.0), 1e-2) == pytest.approx(2.0)


def test_infinity_laplacian_too_close(disk):
    with pytest.raises(DomainError):
        infinity_laplacian_residual(lambda x: 0.0, (0.95, 0.0), 0.1, disk)


def test_neumann_residual_examples(unit_interval, chain_strip):
    bp = [b for b in boundary_sample(unit_interval, 4) if b.label == NEUMANN][0]
    assert neumann_residual(lambda x: 2.0 * x[0], bp, 2.0, 0.125) == 0.0  # dyadic step: no rounding
    assert abs(neumann_residual(chain_strip, bp, 1.0, 0.1)) <= 1e-12
    assert neumann_residual(lambda x: 0.0, bp, 1.0, 0.1) == -1.0


def test_neumann_residual_errors(unit_interval):
    dir_bp = [b for b in boundary_sample(unit_interval, 4) if b.label != NEUMANN][0]
    with pytest.raises(AnalysisError):
        neumann_residual(lambda x: 0.0, dir_bp, 1.0, 0.1)
    bp = BoundaryPoint(np.array([1.0]), np.array([1.0]), NEUMANN)
    with pytest.raises(DomainError):
        neumann_residual(lambda x: 0.0, bp, 1.0, 2.0, unit_interval)


# -- two-leg estimate ------------------------------------------------------------------------
def test_waypoint_depth(square):
    x0, y0 = np.array([0.9, 0.1]), np.array([0.95, 0.4])
    x1 = waypoint(square, x0, y0, 0.05)
    target = max(0.25 * np.linalg.norm(x0 - y0), 0.1)
    assert _signed_boundary_distance(square, x1[None])[0] >= target - 1e-12


def test_two_leg_report(square):
    u = solve_dpp(build_grid(square, 0.2, 0.2 / 3), RunningPayoff.running(1.0, 0.2))
    rng = np.random.default_rng(1)
    pairs = [(rng.random(2), rng.random(2)) for _ in range(20)]
    rep = two_leg_report(u, pairs)
    assert rep.passed and np.isfinite(rep.measured["C"])


# -- reports and studies ------------------------------------------------------------------------
def test_report_record(tmp_path):
    r = AnalysisReport("x", True, 0.5, np.array([1.0, 2.0]), {"eps": 0.1}, {"L": 2})
    assert r.to_record() == "name=x pass=true margin=0.5 location=(1 2) eps=0.10000000000000001 L=2"
    path = tmp_path / "r.txt"
    write_reports([r, r], path)
    assert path.read_text().count("\n") == 2


def test_study_1d(unit_interval):
    res = convergence_study(unit_interval, 1.0, [0.1, 0.05, 0.025])
    gaps = res.gaps
    assert all(r.converged for r in res.rows)
    assert np.all(gaps <= np.array([r.bound for r in res.rows]))
    assert np.all(np.diff(gaps) < 0)
    lines = res.to_csv().splitlines()
    assert lines[0].startswith("eps,h,n_nodes,iterations,converged")
    assert len(lines) == 4


def test_study_1d_strip_only(unit_interval):
    res = convergence_study(unit_interval, 1.0, [0.1, 0.05], variant="strip_only")
    assert np.all(res.gaps <= 1e-10)


def test_study_2d_small(disk):
    res = convergence_study(disk, 1.0, [0.4, 0.2], h_rule=lambda e: e / 3)
    assert np.isnan(res.rows[0].gap) and res.rows[1].gap > 0
    assert all(r.converged for r in res.rows)


def test_study_requires_decreasing(unit_interval):
    with pytest.raises(AnalysisError):
        convergence_study(unit_interval, 1.0, [0.05, 0.1])
