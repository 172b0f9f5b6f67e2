import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tugofwar import (
    DIRICHLET,
    NEUMANN,
    Domain,
    DomainError,
    boundary_label,
    boundary_sample,
    contains,
    dist_to_boundary,
    dist_to_neumann,
    transversality_constant,
)
from tugofwar.geometry import boundary_nodes, nearest_neumann_point


def test_interval_basics(unit_interval):
    assert unit_interval.dim == 1
    assert unit_interval.diameter == 1.0
    assert contains(unit_interval, 0.0) and contains(unit_interval, 1.0)
    assert not contains(unit_interval, 1.1)
    assert dist_to_boundary(unit_interval, 0.3) == pytest.approx(0.3)
    assert dist_to_neumann(unit_interval, 0.3) == pytest.approx(0.7)
    assert boundary_label(unit_interval, 0.0) == DIRICHLET
    assert boundary_label(unit_interval, 1.0) == NEUMANN


def test_interval_requires_order_and_dirichlet():
    with pytest.raises(DomainError):
        Domain.interval(1.0, 0.0)
    with pytest.raises(DomainError):
        Domain.interval(0.0, 1.0, NEUMANN, NEUMANN)


def test_outside_point_raises(disk):
    with pytest.raises(DomainError):
        dist_to_boundary(disk, (2.0, 0.0))


def test_polygon_validation():
    with pytest.raises(DomainError):
        Domain.polygon([(0, 0), (0, 1), (1, 1), (1, 0)], [DIRICHLET] * 4)  # clockwise
    with pytest.raises(DomainError):
        Domain.polygon([(0, 0), (2, 0), (1, 0.1), (2, 2), (0, 2)], [DIRICHLET] * 5)  # non-convex
    with pytest.raises(DomainError):
        Domain.polygon([(0, 0), (1, 0), (0, 1)], [DIRICHLET] * 2)


def test_disk_arc_validation():
    with pytest.raises(DomainError):
        Domain.disk(arcs=[(0, 1, DIRICHLET), (1.5, 2 * np.pi, NEUMANN)])
    with pytest.raises(DomainError):
        Domain.disk(arcs=[(0, np.pi, NEUMANN)])
    with pytest.raises(DomainError):
        Domain.disk(radius=0.0)


def test_square_corner_is_dirichlet(square):
    # bottom edge Dirichlet meets right edge Neumann at (1, 0)
    assert boundary_label(square, (1.0, 0.0)) == DIRICHLET
    assert boundary_label(square, (1.0, 0.5)) == NEUMANN
    assert dist_to_neumann(square, (0.25, 0.5)) == pytest.approx(0.75)
    np.testing.assert_allclose(nearest_neumann_point(square, (0.25, 0.5)), (1.0, 0.5))


def test_disk_labels_and_distances(disk):
    assert boundary_label(disk, (0.0, 1.0)) == NEUMANN
    assert boundary_label(disk, (0.0, -1.0)) == DIRICHLET
    assert boundary_label(disk, (1.0, 0.0)) == DIRICHLET  # arc end: Dirichlet wins
    assert dist_to_boundary(disk, (0.5, 0.0)) == pytest.approx(0.5)
    # below the Neumann arc the nearest Neumann point is an arc endpoint
    assert dist_to_neumann(disk, (0.0, -0.5)) == pytest.approx(np.hypot(1.0, 0.5))


def test_no_neumann_gives_infinite_distance():
    dom = Domain.unit_square((DIRICHLET,) * 4)
    assert dist_to_neumann(dom, (0.5, 0.5)) == np.inf
    assert nearest_neumann_point(dom, (0.5, 0.5)) is None


@pytest.mark.parametrize("dom", [Domain.unit_square(), Domain.disk(),
                                 Domain.polygon([(0, 0), (2, 0), (1, 1.5)], [DIRICHLET, NEUMANN, NEUMANN])])
def test_boundary_sample_invariants(dom):
    bps = boundary_sample(dom, 97)
    assert len(bps) == 97
    for bp in bps:
        assert abs(np.linalg.norm(bp.normal) - 1) < 1e-12
        assert contains(dom, bp.position)
        assert abs(dist_to_boundary(dom, bp.position)) <= dom.tol
        assert bp.label == boundary_label(dom, bp.position)


def test_interval_sample_is_endpoints(unit_interval):
    bps = boundary_sample(unit_interval, 10)
    assert [bp.position[0] for bp in bps] == [0.0, 1.0]
    assert [bp.normal[0] for bp in bps] == [-1.0, 1.0]
    with pytest.raises(ValueError):
        boundary_sample(unit_interval, 3)


def test_boundary_nodes_spacing(square, disk):
    for dom in (square, disk):
        pts = boundary_nodes(dom, 0.05)
        gaps = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
        assert gaps.max() <= 0.05 + 1e-12


def test_transversality_disk_center(disk):
    assert transversality_constant(disk, (0.0, 0.0)) == pytest.approx(1.0)


def test_transversality_square_center(square):
    # attained at the corners
    assert transversality_constant(square, (0.5, 0.5)) == pytest.approx(1 / np.sqrt(2), abs=1e-12)


def test_transversality_errors(disk):
    with pytest.raises(ValueError):
        transversality_constant(disk, (0, 0), boundary_samples=8)
    with pytest.raises(DomainError):
        transversality_constant(disk, (3.0, 0.0))


points_in_disk = st.tuples(st.floats(0, 0.99), st.floats(0, 2 * np.pi)).map(
    lambda rt: (rt[0] * np.cos(rt[1]), rt[0] * np.sin(rt[1])))


@settings(max_examples=40, deadline=None)
@given(points_in_disk)
def test_transversality_is_a_lower_bound(x):
    dom = Domain.disk()
    c = transversality_constant(dom, x, 256)
    assert c > 0
    for bp in boundary_sample(dom, 256):
        d = bp.position - np.asarray(x)
        assert d @ bp.normal / np.linalg.norm(d) >= c - 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_square_distance_matches_closed_form(x, y):
    dom = Domain.unit_square()
    assert dist_to_boundary(dom, (x, y)) == pytest.approx(min(x, y, 1 - x, 1 - y), abs=1e-14)
    assert dist_to_neumann(dom, (x, y)) == pytest.approx(1 - x, abs=1e-14)
