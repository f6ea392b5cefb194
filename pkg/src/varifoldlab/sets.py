"""Computable m-dimensional sets in R^n.

SimplicialSet covers the rectifiable case with exact per-simplex measure
and tangent planes (m = 1 segments, m = 2 triangles). PointCloudSet is the
weighted-sample stand-in for irregular sets. Restriction to a ball clips
segments exactly; triangles crossing the sphere get the circular boundary
replaced by an inscribed polyline whose area defect is budgeted below
1e-6 * r^m per call and recorded in the diagnostics of the result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import Plane

__all__ = [
    "Ball",
    "SimplicialSet",
    "PointCloudSet",
    "measure",
    "restrict",
    "rescale",
    "translate",
    "distance_to_set",
    "ahlfors_ratios",
    "save_set",
    "load_set",
    "CLIP_AREA_TOL",
]

DEGENERATE_MEASURE = 1e-14
CLIP_AREA_TOL = 1e-6  # relative to r^m, per restrict() call


@dataclass(frozen=True)
class Ball:
    """Closed ball B(center, radius); also used to model the open domain U."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    def contains(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(pts - self.center, axis=1) <= self.radius + slack


def _simplex_measures_and_frames(vertices, simplices, m):
    """Exact m-measures and tangent frames for each simplex."""
    v = vertices
    if len(simplices) == 0:
        return np.zeros(0), np.zeros((0, v.shape[1], m))
    edges = v[simplices[:, 1:]] - v[simplices[:, :1]]  # (S, m, n)
    if m == 1:
        lengths = np.linalg.norm(edges[:, 0, :], axis=1)
        meas = lengths
        with np.errstate(invalid="ignore", divide="ignore"):
            frames = (edges[:, 0, :] / np.where(lengths > 0, lengths, 1.0)[:, None])[:, :, None]
    else:
        e1, e2 = edges[:, 0, :], edges[:, 1, :]
        g11 = np.einsum("ij,ij->i", e1, e1)
        g12 = np.einsum("ij,ij->i", e1, e2)
        g22 = np.einsum("ij,ij->i", e2, e2)
        gram = g11 * g22 - g12 * g12
        meas = 0.5 * np.sqrt(np.maximum(gram, 0.0))
        frames = np.zeros((len(simplices), v.shape[1], 2))
        for i in range(len(simplices)):
            a, b = e1[i], e2[i]
            na = np.linalg.norm(a)
            if na == 0:
                continue
            u1 = a / na
            b2 = b - np.dot(b, u1) * u1
            nb = np.linalg.norm(b2)
            if nb == 0:
                continue
            frames[i, :, 0] = u1
            frames[i, :, 1] = b2 / nb
    return meas, frames


@dataclass(frozen=True)
class SimplicialSet:
    """Weighted m-dimensional simplicial complex in R^n, m in {1, 2}.

    Per-simplex m-measure and tangent plane frames are derived at
    construction; degenerate simplices (measure <= 1e-14) are rejected.
    """

    ambient_dim: int
    dim: int
    vertices: np.ndarray
    simplices: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)
    simplex_measures: np.ndarray = field(init=False, repr=False, compare=False)
    simplex_frames: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, m = int(self.ambient_dim), int(self.dim)
        if m not in (1, 2):
            raise ValueError("only dimensions m in {1, 2} are supported")
        if n < m:
            raise ValueError("ambient dimension below set dimension")
        v = np.asarray(self.vertices, dtype=float).reshape(-1, n)
        s = np.asarray(self.simplices, dtype=np.int64).reshape(-1, m + 1)
        if len(s) and (s.min() < 0 or s.max() >= len(v)):
            raise ValueError("simplex vertex index out of range")
        meas, frames = _simplex_measures_and_frames(v, s, m)
        if len(meas) and meas.min() <= DEGENERATE_MEASURE:
            raise ValueError("degenerate simplex (measure <= 1e-14)")
        for arr in (v, s, meas, frames):
            arr.setflags(write=False)
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "dim", m)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "simplices", s)
        object.__setattr__(self, "simplex_measures", meas)
        object.__setattr__(self, "simplex_frames", frames)

    @property
    def total_measure(self) -> float:
        return float(self.simplex_measures.sum())

    def simplex_plane(self, i: int) -> Plane:
        return Plane(self.simplex_frames[i])

    def simplex_points(self, i: int) -> np.ndarray:
        return self.vertices[self.simplices[i]]

    def is_empty(self) -> bool:
        return len(self.simplices) == 0

    @classmethod
    def empty(cls, ambient_dim: int, dim: int) -> "SimplicialSet":
        return cls(ambient_dim, dim, np.zeros((0, ambient_dim)), np.zeros((0, dim + 1), dtype=np.int64))

    @classmethod
    def from_polyline(cls, points, ambient_dim=None) -> "SimplicialSet":
        pts = np.asarray(points, dtype=float)
        n = pts.shape[1] if ambient_dim is None else ambient_dim
        segs = np.column_stack([np.arange(len(pts) - 1), np.arange(1, len(pts))])
        return cls(n, 1, pts, segs)

    @classmethod
    def from_segments(cls, segments) -> "SimplicialSet":
        """Build from a list of (p, q) endpoint pairs (disconnected allowed)."""
        segs = [np.asarray(s, dtype=float) for s in segments]
        n = segs[0].shape[1]
        verts = np.concatenate(segs, axis=0)
        idx = np.arange(len(verts)).reshape(-1, 2)
        return cls(n, 1, verts, idx)

    @classmethod
    def from_triangles(cls, triangles) -> "SimplicialSet":
        tris = [np.asarray(t, dtype=float) for t in triangles]
        n = tris[0].shape[1]
        verts = np.concatenate(tris, axis=0)
        idx = np.arange(len(verts)).reshape(-1, 3)
        return cls(n, 2, verts, idx)


@dataclass(frozen=True)
class PointCloudSet:
    """Weighted point sample of an m-dimensional set (e.g. an irregular set)."""

    ambient_dim: int
    dim: int
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        n = int(self.ambient_dim)
        pts = np.asarray(self.points, dtype=float).reshape(-1, n)
        w = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(pts) != len(w):
            raise ValueError("one mass per point required")
        if len(w) and w.min() <= 0:
            raise ValueError("masses must be positive")
        if not np.isfinite(w).all():
            raise ValueError("masses must be finite")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", w)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())


def measure(e: SimplicialSet) -> float:
    """Total m-dimensional measure: the exact sum of simplex m-volumes."""
    return e.total_measure


def translate(e: SimplicialSet, offset) -> SimplicialSet:
    off = np.asarray(offset, dtype=float)
    return SimplicialSet(e.ambient_dim, e.dim, e.vertices + off, e.simplices,
                         diagnostics=_transform_diagnostics(e.diagnostics,
                                                            lambda p: p + off))


def _transform_diagnostics(diag, fn):
    out = dict(diag)
    if "clip_polygons" in out:
        out["clip_polygons"] = [fn(np.asarray(p, dtype=float)) for p in out["clip_polygons"]]
    return out


def rescale(e: SimplicialSet, x, r: float) -> SimplicialSet:
    """Map vertices y -> (y - x) / r. Measure scales by r^{-m} exactly."""
    if r <= 0:
        raise ValueError("rescale radius must be positive")
    x = np.asarray(x, dtype=float)
    return SimplicialSet(e.ambient_dim, e.dim, (e.vertices - x) / r, e.simplices,
                         diagnostics=_transform_diagnostics(e.diagnostics,
                                                            lambda p: (p - x) / r))


def _clip_segment_to_ball(p, q, center, radius):
    """Parameter interval of {p + t(q-p)} inside the closed ball, or None."""
    d = q - p
    a = float(np.dot(d, d))
    if a == 0.0:
        return None
    f = p - center
    b = 2.0 * float(np.dot(d, f))
    c = float(np.dot(f, f)) - radius * radius
    disc = b * b - 4 * a * c
    if disc <= 0:
        return None
    sq = np.sqrt(disc)
    t0 = max((-b - sq) / (2 * a), 0.0)
    t1 = min((-b + sq) / (2 * a), 1.0)
    if t1 - t0 <= 1e-14:
        return None
    return t0, t1


def _triangle_plane_basis(tri):
    """Orthonormal basis (u, v) of the triangle's own affine plane."""
    a, b, c = tri
    e1 = b - a
    u = e1 / np.linalg.norm(e1)
    e2 = c - a
    w = e2 - np.dot(e2, u) * u
    v = w / np.linalg.norm(w)
    return a, u, v


def _polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _arc_defect(radius, span, steps):
    """Exact area between an arc of the given span and its inscribed
    polyline with the given number of equal chords."""
    theta = span / steps
    return 0.5 * radius * radius * steps * (theta - np.sin(theta))


def _clip_polygon_to_disk(poly, center, radius, max_arc_step):
    """Clip a convex 2-d polygon against a disk.

    Straight portions are kept exactly; each circular arc of the boundary is
    replaced by an inscribed polyline with angular step <= max_arc_step.
    Returns (boundary points CCW, total arc angle, inscribed-area defect).
    """
    if _polygon_area(poly) < 0:
        poly = poly[::-1]
    c = np.asarray(center, dtype=float)
    r2 = radius * radius
    inside = np.einsum("ij,ij->i", poly - c, poly - c) <= r2 * (1 + 1e-14)

    if inside.all():
        return [pt for pt in poly], 0.0, 0.0

    # Walk edges, recording kept vertices and circle crossings in order.
    events = []  # (point, entering_flag or None for interior vertex)
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        if inside[i]:
            events.append((p, None))
        d = q - p
        a = float(np.dot(d, d))
        if a == 0.0:
            continue
        f = p - c
        b = 2.0 * float(np.dot(d, f))
        cc = float(np.dot(f, f)) - r2
        disc = b * b - 4 * a * cc
        if disc <= 0:
            continue
        sq = np.sqrt(disc)
        for t, entering in ((( -b - sq) / (2 * a), True), ((-b + sq) / (2 * a), False)):
            if 1e-14 < t < 1 - 1e-14:
                events.append((p + t * d, entering))

    if not events:
        # no crossings and no inside vertices: either disjoint or disk inside polygon
        if _point_in_convex_polygon(c, poly):
            steps = max(3, int(np.ceil(2 * np.pi / max_arc_step)))
            ang = np.linspace(0.0, 2 * np.pi, steps, endpoint=False)
            circle = c + radius * np.column_stack([np.cos(ang), np.sin(ang)])
            return [pt for pt in circle], 2 * np.pi, _arc_defect(radius, 2 * np.pi, steps)
        return [], 0.0, 0.0

    out = []
    arc_total = 0.0
    defect = 0.0
    ne = len(events)
    for i in range(ne):
        pt, flag = events[i]
        out.append(pt)
        if flag is False:  # exiting the disk: follow the arc to the next entry point
            nxt_pt, nxt_flag = events[(i + 1) % ne]
            if nxt_flag is not True:
                continue  # tangential grazing; skip arc
            a0 = np.arctan2(pt[1] - c[1], pt[0] - c[0])
            a1 = np.arctan2(nxt_pt[1] - c[1], nxt_pt[0] - c[0])
            while a1 <= a0 + 1e-15:
                a1 += 2 * np.pi
            span = a1 - a0
            arc_total += span
            steps = max(1, int(np.ceil(span / max_arc_step)))
            defect += _arc_defect(radius, span, steps)
            for j in range(1, steps):
                ang = a0 + span * j / steps
                out.append(c + radius * np.array([np.cos(ang), np.sin(ang)]))
    return out, arc_total, defect


def _point_in_convex_polygon(pt, poly):
    k = len(poly)
    sign = 0
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        cr = (b[0] - a[0]) * (pt[1] - a[1]) - (b[1] - a[1]) * (pt[0] - a[0])
        if abs(cr) < 1e-15:
            continue
        s = 1 if cr > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def restrict(e: SimplicialSet, ball: Ball) -> SimplicialSet:
    """Geometric intersection E ∩ B as a new SimplicialSet.

    Segments are cut exactly at the sphere. Triangles crossing the sphere
    are clipped in their own plane against the disk of intersection, with
    the curved boundary inscribed finely enough that the total area defect
    of the call stays below 1e-6 * r^m; the defect bound and arc point
    count are recorded in the result's diagnostics.
    """
    if e.ambient_dim != len(ball.center):
        raise ValueError("ball and set ambient dimensions differ")
    n, m = e.ambient_dim, e.dim
    c, r = ball.center, ball.radius

    if m == 1:
        segs = []
        for i in range(len(e.simplices)):
            p, q = e.simplex_points(i)
            t = _clip_segment_to_ball(p, q, c, r)
            if t is None:
                continue
            t0, t1 = t
            d = q - p
            segs.append((p + t0 * d, p + t1 * d))
        if not segs:
            return SimplicialSet.empty(n, 1)
        out = SimplicialSet.from_segments(segs)
        object.__setattr__(out, "diagnostics", {"clip_area_error_bound": 0.0, "arc_points": 0})
        return out

    # m == 2: per-triangle in-plane disk clipping.
    # Angular step chosen so that the summed inscribed-arc defect over the
    # call is below CLIP_AREA_TOL * r^2:  total <= (2*pi/step)*(rho^2 step^3)/12.
    max_arc_step = np.sqrt(6.0 * CLIP_AREA_TOL / np.pi)  # rho <= r cancels r^2
    tris = []
    loops = []  # convex boundary loop per clipped region (union-sweep sidecar)
    arc_points = 0
    err_bound = 0.0
    for i in range(len(e.simplices)):
        tri = e.simplex_points(i)
        dist2 = np.einsum("ij,ij->i", tri - c, tri - c)
        if (dist2 <= r * r * (1 + 1e-14)).all():
            tris.append(tri)  # wholly inside: kept exactly
            loops.append(np.array(tri))
            continue
        a0, u, v = _triangle_plane_basis(tri)
        rel = c - a0
        in_plane = np.array([np.dot(rel, u), np.dot(rel, v)])
        off2 = float(np.dot(rel, rel)) - float(np.dot(in_plane, in_plane))
        rho2 = r * r - off2
        if rho2 <= 0:
            continue
        rho = np.sqrt(rho2)
        poly2 = np.column_stack([ (tri - a0) @ u, (tri - a0) @ v ])
        clipped, arc_angle, defect = _clip_polygon_to_disk(poly2, in_plane, rho, max_arc_step)
        if len(clipped) < 3:
            continue
        arc_points += max(0, int(np.ceil(arc_angle / max_arc_step)) - 1)
        err_bound += defect
        poly = np.asarray(clipped)
        loops.append(poly @ np.stack([u, v]) + a0)
        cen2 = poly.mean(axis=0)
        kq = len(poly)
        for j in range(kq):
            a2, b2 = poly[j], poly[(j + 1) % kq]
            area = 0.5 * abs((a2[0] - cen2[0]) * (b2[1] - cen2[1])
                             - (a2[1] - cen2[1]) * (b2[0] - cen2[0]))
            if area > 2 * DEGENERATE_MEASURE:
                tris.append(np.array([a0 + cen2[0] * u + cen2[1] * v,
                                      a0 + a2[0] * u + a2[1] * v,
                                      a0 + b2[0] * u + b2[1] * v]))
    if not tris:
        return SimplicialSet.empty(n, 2)
    out = SimplicialSet.from_triangles(tris)
    object.__setattr__(out, "diagnostics",
                       {"clip_area_error_bound": float(err_bound),
                        "arc_points": int(arc_points),
                        "clip_polygons": loops})
    return out


def _point_segment_distance(points, a, b):
    """Distances from an array of points to segment [a, b]."""
    d = b - a
    denom = float(np.dot(d, d))
    if denom == 0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ d / denom, 0.0, 1.0)
    foot = a + t[:, None] * d
    return np.linalg.norm(points - foot, axis=1)


def _point_triangle_distance(points, tri):
    """Distances from an array of points to a filled triangle."""
    a0, u, v = _triangle_plane_basis(tri)
    rel = points - a0
    x = rel @ u
    y = rel @ v
    perp2 = np.maximum(np.einsum("ij,ij->i", rel, rel) - x * x - y * y, 0.0)
    p2 = np.column_stack([x, y])
    t2 = np.column_stack([(tri - a0) @ u, (tri - a0) @ v])
    # barycentric inside test
    d = np.full(len(points), np.inf)
    v0, v1, v2 = t2
    den = (v1[1] - v2[1]) * (v0[0] - v2[0]) + (v2[0] - v1[0]) * (v0[1] - v2[1])
    l1 = ((v1[1] - v2[1]) * (p2[:, 0] - v2[0]) + (v2[0] - v1[0]) * (p2[:, 1] - v2[1])) / den
    l2 = ((v2[1] - v0[1]) * (p2[:, 0] - v2[0]) + (v0[0] - v2[0]) * (p2[:, 1] - v2[1])) / den
    l3 = 1.0 - l1 - l2
    inside = (l1 >= -1e-12) & (l2 >= -1e-12) & (l3 >= -1e-12)
    d[inside] = 0.0
    for i in range(3):
        e0, e1 = t2[i], t2[(i + 1) % 3]
        de = _point_segment_distance(p2, e0, e1)
        d = np.minimum(d, de)
    return np.sqrt(d * d + perp2)


def distance_to_set(points, target) -> np.ndarray:
    """Exact Euclidean distances from each point to a SimplicialSet or
    PointCloudSet (point-segment / point-triangle / nearest sample point)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(target, PointCloudSet):
        if len(target.points) == 0:
            return np.full(len(pts), np.inf)
        diffs = pts[:, None, :] - target.points[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diffs, diffs)).min(axis=1)
    if target.is_empty():
        return np.full(len(pts), np.inf)
    best = np.full(len(pts), np.inf)
    for i in range(len(target.simplices)):
        sp = target.simplex_points(i)
        if target.dim == 1:
            di = _point_segment_distance(pts, sp[0], sp[1])
        else:
            di = _point_triangle_distance(pts, sp)
        best = np.minimum(best, di)
    return best


def ahlfors_ratios(e: SimplicialSet, x, radii) -> np.ndarray:
    """measure(E ∩ B(x, r)) / r^m over the given radii."""
    x = np.asarray(x, dtype=float)
    out = []
    for r in radii:
        out.append(measure(restrict(e, Ball(x, float(r)))) / float(r) ** e.dim)
    return np.array(out)


def save_set(e, path) -> None:
    """Write a set to JSON. SimplicialSet uses the {ambient_dim, dim,
    vertices, simplices} schema; PointCloudSet uses {.., points, masses}."""
    if isinstance(e, SimplicialSet):
        doc = {
            "ambient_dim": e.ambient_dim,
            "dim": e.dim,
            "vertices": e.vertices.tolist(),
            "simplices": e.simplices.tolist(),
        }
    elif isinstance(e, PointCloudSet):
        doc = {
            "ambient_dim": e.ambient_dim,
            "dim": e.dim,
            "points": e.points.tolist(),
            "masses": e.masses.tolist(),
        }
    else:
        raise TypeError(f"cannot serialize {type(e).__name__}")
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_set(path):
    with open(path) as fh:
        doc = json.load(fh)
    if "points" in doc:
        return PointCloudSet(doc["ambient_dim"], doc["dim"],
                             np.array(doc["points"], dtype=float),
                             np.array(doc["masses"], dtype=float))
    return SimplicialSet(doc["ambient_dim"], doc["dim"],
                         np.array(doc["vertices"], dtype=float),
                         np.array(doc["simplices"], dtype=np.int64))
