"""Domains, boundary labels, outward normals and distances.

Three kinds of domain are supported: an interval ``(a, b)``, a convex
polygon given by counterclockwise vertices, and a disk.  The boundary is
split into Dirichlet (absorbing) and Neumann (payoff strip) pieces:
per endpoint for an interval, per edge for a polygon and per angular arc
for a disk.  Where a Dirichlet and a Neumann piece meet, the point is
labelled Dirichlet.

All functions accept points either as scalars (interval only) or as array
likes of shape ``(d,)``; the vectorised helpers prefixed with ``_`` work on
``(m, d)`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
_LABELS = (DIRICHLET, NEUMANN)

# inclusion / on-boundary tolerance, relative to the diameter
REL_TOL = 1e-12

__all__ = [
    "DIRICHLET",
    "NEUMANN",
    "Domain",
    "BoundaryPoint",
    "DomainError",
    "contains",
    "dist_to_boundary",
    "dist_to_neumann",
    "nearest_neumann_point",
    "boundary_label",
    "boundary_sample",
    "boundary_nodes",
    "transversality_constant",
]


class DomainError(ValueError):
    """Raised for invalid domains or points outside the domain."""


@dataclass(frozen=True)
class BoundaryPoint:
    position: np.ndarray
    normal: np.ndarray
    label: str


@dataclass(frozen=True, eq=False)
class Domain:
    """A bounded convex domain with labelled boundary.

    Use the :meth:`interval`, :meth:`polygon` and :meth:`disk` constructors
    rather than instantiating directly.

    ``labels`` holds, for an interval, the labels of ``(a, b)``; for a
    polygon, one label per edge (edge ``i`` joins vertex ``i`` to vertex
    ``i + 1``); for a disk, a tuple of ``(start, end, label)`` arcs with
    angles in radians covering one full turn.
    """

    kind: str
    vertices: np.ndarray | None = None
    a: float = 0.0
    b: float = 1.0
    center: np.ndarray | None = None
    radius: float = 1.0
    labels: tuple = ()

    # -- constructors -------------------------------------------------------
    @classmethod
    def interval(cls, a=0.0, b=1.0, left=DIRICHLET, right=NEUMANN):
        if not a < b:
            raise DomainError(f"interval requires a < b, got a={a}, b={b}")
        dom = cls(kind="interval", a=float(a), b=float(b), labels=(left, right))
        dom._validate_labels(dom.labels)
        return dom

    @classmethod
    def polygon(cls, vertices, labels):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise DomainError("polygon needs at least 3 vertices in the plane")
        labels = tuple(labels)
        if len(labels) != len(verts):
            raise DomainError(
                f"polygon has {len(verts)} edges but {len(labels)} labels"
            )
        e = np.roll(verts, -1, axis=0) - verts
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = np.max(np.abs(cross))
        if scale == 0 or np.any(cross <= REL_TOL * scale):
            raise DomainError("polygon must be convex with counterclockwise vertices")
        dom = cls(kind="polygon", vertices=verts, labels=labels)
        dom._validate_labels(labels)
        return dom

    @classmethod
    def unit_square(cls, labels=(DIRICHLET, NEUMANN, DIRICHLET, DIRICHLET)):
        """The square [0, 1]^2; edges are bottom, right, top, left."""
        return cls.polygon([(0, 0), (1, 0), (1, 1), (0, 1)], labels)

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius=1.0, arcs=None):
        if radius <= 0:
            raise DomainError("disk radius must be positive")
        if arcs is None:
            arcs = [(0.0, np.pi, NEUMANN), (np.pi, 2 * np.pi, DIRICHLET)]
        arcs = sorted((float(s), float(t), lab) for s, t, lab in arcs)
        for s, t, _ in arcs:
            if not t > s:
                raise DomainError(f"arc ({s}, {t}) is empty")
        for (_, t, _), (s, _, _) in zip(arcs, arcs[1:]):
            if abs(t - s) > 1e-12:
                raise DomainError("disk arcs must be contiguous and non-overlapping")
        if abs(arcs[-1][1] - arcs[0][0] - 2 * np.pi) > 1e-12:
            raise DomainError("disk arcs must cover the full circle")
        dom = cls(
            kind="disk",
            center=np.asarray(center, dtype=float),
            radius=float(radius),
            labels=tuple(arcs),
        )
        dom._validate_labels([lab for _, _, lab in arcs])
        return dom

    @staticmethod
    def _validate_labels(labels):
        labels = [lab for lab in labels]
        for lab in labels:
            if lab not in _LABELS:
                raise DomainError(f"unknown boundary label {lab!r}")
        if DIRICHLET not in labels:
            raise DomainError("at least one Dirichlet boundary piece is required")

    # -- basic properties ---------------------------------------------------
    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            return self.b - self.a
        if self.kind == "disk":
            return 2 * self.radius
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    @property
    def tol(self) -> float:
        return REL_TOL * self.diameter

    @property
    def has_neumann(self) -> bool:
        return any(lab == NEUMANN for lab in self._piece_labels())

    def bounding_box(self):
        if self.kind == "interval":
            return np.array([self.a]), np.array([self.b])
        if self.kind == "disk":
            return self.center - self.radius, self.center + self.radius
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def centroid(self) -> np.ndarray:
        if self.kind == "interval":
            return np.array([(self.a + self.b) / 2])
        if self.kind == "disk":
            return self.center.copy()
        return self.vertices.mean(axis=0)

    def perimeter(self) -> float:
        if self.kind == "interval":
            return 0.0
        if self.kind == "disk":
            return 2 * np.pi * self.radius
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.linalg.norm(e, axis=1).sum())

    def _piece_labels(self):
        if self.kind == "disk":
            return [lab for _, _, lab in self.labels]
        return list(self.labels)

    def _edges(self):
        p = self.vertices
        q = np.roll(p, -1, axis=0)
        e = q - p
        length = np.linalg.norm(e, axis=1)
        normal = np.stack([e[:, 1], -e[:, 0]], axis=1) / length[:, None]
        return p, q, length, normal


def _as_points(domain: Domain, x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if domain.dim == 1 and pts.ndim == 0:
        pts = pts.reshape(1)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if pts.shape[0] == domain.dim else pts.reshape(-1, 1)
    if pts.shape[-1] != domain.dim:
        raise DomainError(f"expected points of dimension {domain.dim}")
    return pts


def _as_point(domain: Domain, x) -> np.ndarray:
    pts = _as_points(domain, x)
    if len(pts) != 1:
        raise DomainError("expected a single point")
    return pts[0]


# -- vectorised kernels ------------------------------------------------------
def _segment_distance(pts, p, q):
    """Distance from each point to each segment; returns (m, k) and foot points."""
    e = q - p
    ee = np.einsum("kd,kd->k", e, e)
    w = pts[:, None, :] - p[None, :, :]
    t = np.clip(np.einsum("mkd,kd->mk", w, e) / ee, 0.0, 1.0)
    foot = p[None, :, :] + t[..., None] * e[None, :, :]
    return np.linalg.norm(pts[:, None, :] - foot, axis=-1), foot


def _signed_boundary_distance(domain: Domain, pts: np.ndarray) -> np.ndarray:
    """Positive inside, negative outside (exact for convex domains inside)."""
    if domain.kind == "interval":
        x = pts[:, 0]
        return np.minimum(x - domain.a, domain.b - x)
    if domain.kind == "disk":
        return domain.radius - np.linalg.norm(pts - domain.center, axis=1)
    p, _, _, normal = domain._edges()
    return -np.einsum("mkd,kd->mk", pts[:, None, :] - p[None], normal).max(axis=1)


def _angle(domain: Domain, pts: np.ndarray) -> np.ndarray:
    d = pts - domain.center
    return np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi)


def _arc_distance(domain: Domain, pts: np.ndarray, start: float, end: float):
    """Distance from points to one circle arc and the nearest arc points."""
    c, r = domain.center, domain.radius
    theta = _angle(domain, pts)
    rel = np.mod(theta - start, 2 * np.pi)
    span = end - start
    inside = rel <= span
    rho = np.linalg.norm(pts - c, axis=1)
    radial = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    foot = c + r * radial
    dist = np.abs(r - rho)
    ends = np.array([[np.cos(start), np.sin(start)], [np.cos(end), np.sin(end)]]) * r + c
    d_end = np.linalg.norm(pts[:, None, :] - ends[None], axis=-1)
    j = d_end.argmin(axis=1)
    # at the centre every boundary point is equidistant; the radial foot is fine
    use_end = ~inside
    dist = np.where(use_end, d_end[np.arange(len(pts)), j], dist)
    foot = np.where(use_end[:, None], ends[j], foot)
    return dist, foot


def _neumann_distance(domain: Domain, pts: np.ndarray):
    """Distance to Gamma_N and the nearest Gamma_N point, vectorised."""
    m = len(pts)
    best = np.full(m, np.inf)
    foot = np.full((m, domain.dim), np.nan)
    if domain.kind == "interval":
        for end, lab in zip((domain.a, domain.b), domain.labels):
            if lab == NEUMANN:
                d = np.abs(pts[:, 0] - end)
                better = d < best
                best = np.where(better, d, best)
                foot[better] = end
        return best, foot
    if domain.kind == "polygon":
        p, q, _, _ = domain._edges()
        idx = [i for i, lab in enumerate(domain.labels) if lab == NEUMANN]
        if not idx:
            return best, foot
        d, f = _segment_distance(pts, p[idx], q[idx])
        j = d.argmin(axis=1)
        return d[np.arange(m), j], f[np.arange(m), j]
    for s, t, lab in domain.labels:
        if lab != NEUMANN:
            continue
        d, f = _arc_distance(domain, pts, s, t)
        better = d < best
        best = np.where(better, d, best)
        foot[better] = f[better]
    return best, foot


def _labels_at(domain: Domain, pts: np.ndarray) -> np.ndarray:
    """Boundary label of points assumed to lie on the boundary."""
    tol = domain.tol
    out = np.full(len(pts), NEUMANN, dtype=object)
    if domain.kind == "interval":
        for end, lab in zip((domain.a, domain.b), domain.labels):
            if lab == DIRICHLET:
                out[np.abs(pts[:, 0] - end) <= tol] = DIRICHLET
        return out
    if domain.kind == "polygon":
        p, q, _, _ = domain._edges()
        d, _ = _segment_distance(pts, p, q)
        dirichlet = np.array([lab == DIRICHLET for lab in domain.labels])
        out[((d <= tol) & dirichlet[None, :]).any(axis=1)] = DIRICHLET
        return out
    for s, t, lab in domain.labels:
        if lab != DIRICHLET:
            continue
        d, _ = _arc_distance(domain, pts, s, t)
        out[d <= tol] = DIRICHLET
    return out


def _normals_at(domain: Domain, pts: np.ndarray) -> np.ndarray:
    """Outward normals at boundary points; corners take the lower-index edge."""
    if domain.kind == "interval":
        mid = (domain.a + domain.b) / 2
        return np.where(pts[:, :1] < mid, -1.0, 1.0)
    if domain.kind == "disk":
        d = pts - domain.center
        return d / np.linalg.norm(d, axis=1, keepdims=True)
    p, q, _, normal = domain._edges()
    d, _ = _segment_distance(pts, p, q)
    on = d <= domain.tol
    # first edge the point lies on, else the nearest one
    j = np.where(on.any(axis=1), on.argmax(axis=1), d.argmin(axis=1))
    return normal[j]


# -- public operations -------------------------------------------------------
def contains(domain: Domain, x) -> bool:
    """True iff ``x`` lies in the closed domain, up to ``1e-12 * diameter``."""
    pts = _as_points(domain, x)
    return bool(np.all(_signed_boundary_distance(domain, pts) >= -domain.tol))


def _contains_many(domain: Domain, pts: np.ndarray) -> np.ndarray:
    return _signed_boundary_distance(domain, pts) >= -domain.tol


def _require_inside(domain: Domain, pts: np.ndarray):
    if not np.all(_contains_many(domain, pts)):
        raise DomainError("point lies outside the domain")


def dist_to_boundary(domain: Domain, x) -> float:
    pts = _as_points(domain, x)
    _require_inside(domain, pts)
    return float(max(_signed_boundary_distance(domain, pts)[0], 0.0))


def dist_to_neumann(domain: Domain, x) -> float:
    """Euclidean distance from ``x`` to the Neumann boundary.

    Returns ``inf`` when the domain has no Neumann piece.
    """
    pts = _as_points(domain, x)
    _require_inside(domain, pts)
    return float(_neumann_distance(domain, pts)[0][0])


def nearest_neumann_point(domain: Domain, x) -> np.ndarray | None:
    pts = _as_points(domain, x)
    _require_inside(domain, pts)
    d, foot = _neumann_distance(domain, pts)
    return None if not np.isfinite(d[0]) else foot[0]


def boundary_label(domain: Domain, y) -> str:
    pts = _as_points(domain, y)
    if abs(_signed_boundary_distance(domain, pts)[0]) > domain.tol:
        raise DomainError("point is not on the boundary")
    return _labels_at(domain, pts)[0]


def _make_points(domain: Domain, pts: np.ndarray) -> list[BoundaryPoint]:
    normals = _normals_at(domain, pts)
    labels = _labels_at(domain, pts)
    return [BoundaryPoint(p.copy(), n.copy(), str(lab)) for p, n, lab in zip(pts, normals, labels)]


def _polygon_arclength_points(domain: Domain, s: np.ndarray) -> np.ndarray:
    p, _, length, _ = domain._edges()
    cum = np.cumsum(length)
    # side="left": a point exactly at a vertex belongs to the lower-index edge
    j = np.minimum(np.searchsorted(cum, s, side="left"), len(p) - 1)
    start = cum[j] - length[j]
    t = (s - start) / length[j]
    q = np.roll(p, -1, axis=0)
    return p[j] + t[:, None] * (q[j] - p[j])


def boundary_sample(domain: Domain, n: int) -> list[BoundaryPoint]:
    """``n`` roughly uniformly spaced boundary points with normals and labels.

    For an interval the two endpoints are returned whatever ``n`` is.
    Polygon samples sit at arclengths ``(i + 1/2) P / n``; disk samples at
    angles ``2 pi i / n``.
    """
    if n < 4:
        raise ValueError("boundary_sample needs n >= 4")
    if domain.kind == "interval":
        pts = np.array([[domain.a], [domain.b]])
    elif domain.kind == "disk":
        theta = 2 * np.pi * np.arange(n) / n
        pts = domain.center + domain.radius * np.stack([np.cos(theta), np.sin(theta)], 1)
    else:
        s = (np.arange(n) + 0.5) * domain.perimeter() / n
        pts = _polygon_arclength_points(domain, s)
    return _make_points(domain, pts)


def boundary_nodes(domain: Domain, spacing: float) -> np.ndarray:
    """Boundary points with gaps at most ``spacing``, polygon vertices included."""
    if domain.kind == "interval":
        return np.array([[domain.a], [domain.b]])
    if domain.kind == "disk":
        n = max(int(np.ceil(domain.perimeter() / spacing - 1e-9)), 8)
        theta = 2 * np.pi * np.arange(n) / n
        return domain.center + domain.radius * np.stack([np.cos(theta), np.sin(theta)], 1)
    p, q, length, _ = domain._edges()
    out = []
    for pi, qi, li in zip(p, q, length):
        m = max(int(np.ceil(li / spacing - 1e-9)), 1)
        t = np.arange(m) / m
        out.append(pi + t[:, None] * (qi - pi))
    return np.concatenate(out)


def transversality_constant(domain: Domain, x0, boundary_samples: int = 4096) -> float:
    """Sampled lower estimate of the transversality constant at ``x0``.

    Minimum over sampled boundary points ``y != x0`` of the cosine between
    ``y - x0`` and the outward normal at ``y``.  Polygon vertices are added
    to the sample.
    """
    if boundary_samples < 16:
        raise ValueError("transversality_constant needs at least 16 samples")
    if domain.diameter <= 0:
        raise DomainError("degenerate domain")
    x0 = _as_point(domain, x0)
    _require_inside(domain, x0[None])
    bps = boundary_sample(domain, boundary_samples)
    pts = np.array([bp.position for bp in bps])
    normals = np.array([bp.normal for bp in bps])
    if domain.kind == "polygon":
        pts = np.concatenate([pts, domain.vertices])
        normals = np.concatenate([normals, _normals_at(domain, domain.vertices)])
    d = pts - x0
    r = np.linalg.norm(d, axis=1)
    keep = r > domain.tol
    if not keep.any():
        raise DomainError("no boundary sample distinct from x0")
    cos = np.einsum("md,md->m", d[keep], normals[keep]) / r[keep]
    return float(np.clip(cos.min(), -1.0, 1.0))
