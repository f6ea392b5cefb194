"""The two convergence notions under comparison, plus the projected-mass
functional that links them.

- ``hausdorff_local``: normalized two-sided sup distance inside a ball,
  exact point-to-simplex distances, sup over adaptively refined samples.
- ``bl_distance``: bounded-Lipschitz distance between discrete varifolds
  under the product metric |x - y| + grassmann_distance. The exact method
  solves the mass-transshipment LP with unit-rate slack for unmatched mass
  (so moving mass farther than 2 is dominated by destroy + create, matching
  |phi| <= 1). The dictionary method maximizes over a fixed published
  family of certified 1-Lipschitz, bounded-by-1 test functions and is
  always a lower bound of the LP value.
- ``projected_mass``: m-measure of the image (overlaps counted once) of
  the clipped, rescaled set under projection to a plane.
- ``filling_check``: tabulates projected_mass over (k, r) and flags whether
  the rescaled projections fill the unit disk in the limit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .geometry import Plane, axis_plane, grassmann_distance_matrix
from .sets import (Ball, PointCloudSet, SimplicialSet, distance_to_set,
                   measure, rescale, restrict)
from .unions import interval_union_length, polygon_union_area
from .varifold import DiscreteVarifold, unit_ball_volume

__all__ = [
    "HausdorffReport",
    "BLDistanceReport",
    "FillingReport",
    "hausdorff_local",
    "hausdorff_local_report",
    "bl_distance",
    "bl_dictionary_size",
    "projected_mass",
    "filling_check",
]

SUP_REFINE_TOL = 1e-4  # relative to r, stopping rule for the sup refinement
MC_TARGET_SE = 1e-3    # relative to omega_m, Monte Carlo fallback target


# ---------------------------------------------------------------------------
# normalized local Hausdorff distance

def _sample_points(clipped, level):
    """Sample points of a ball-clipped set at the given refinement level."""
    if isinstance(clipped, PointCloudSet):
        return clipped.points, 0.0
    pts = []
    gap = 0.0
    for i in range(len(clipped.simplices)):
        spx = clipped.simplex_points(i)
        if clipped.dim == 1:
            t = np.linspace(0.0, 1.0, 2 ** level + 1)
            pts.append(spx[0] + t[:, None] * (spx[1] - spx[0]))
            gap = max(gap, float(np.linalg.norm(spx[1] - spx[0])) / 2 ** level)
        else:
            a, b, c = spx
            k = 2 ** level
            for ii in range(k + 1):
                for jj in range(k + 1 - ii):
                    pts.append((a + (b - a) * (ii / k) + (c - a) * (jj / k))[None, :])
            diam = max(np.linalg.norm(b - a), np.linalg.norm(c - b), np.linalg.norm(a - c))
            gap = max(gap, float(diam) / k)
    if not pts:
        return np.zeros((0, clipped.ambient_dim)), 0.0
    return np.concatenate(pts, axis=0), gap


def _clip_to_ball(s, ball):
    if isinstance(s, PointCloudSet):
        inside = ball.contains(s.points)
        return PointCloudSet(s.ambient_dim, s.dim, s.points[inside], s.masses[inside]) \
            if inside.any() else PointCloudSet(s.ambient_dim, s.dim,
                                               np.zeros((0, s.ambient_dim)), np.zeros(0))
    return restrict(s, ball)


def _one_sided_sup(source_clipped, target, r, samples):
    """sup over samples of source∩B of dist(., target); 0 on empty source."""
    if isinstance(source_clipped, PointCloudSet):
        if len(source_clipped.points) == 0:
            return 0.0, 0.0
        d = distance_to_set(source_clipped.points, target)
        return float(d.max()), 0.0
    if source_clipped.is_empty():
        return 0.0, 0.0
    n_simplices = max(len(source_clipped.simplices), 1)
    per = max(1, int(np.ceil(samples / n_simplices)))
    level = max(0, int(np.ceil(np.log2(per))))
    prev = -np.inf
    sup, gap = 0.0, 0.0
    for lv in range(level, level + 8):
        pts, gap = _sample_points(source_clipped, lv)
        if len(pts) == 0:
            return 0.0, 0.0
        sup = float(distance_to_set(pts, target).max())
        if prev >= 0 and sup - prev < SUP_REFINE_TOL * r:
            break
        if len(pts) > 200_000:
            break
        prev = sup
    return sup, gap


@dataclass(frozen=True)
class HausdorffReport:
    value: float
    sup_first_to_second: float
    sup_second_to_first: float
    resolution: float  # one-sided bound: true value <= value + resolution

    def to_dict(self):
        return {
            "value": self.value,
            "sup_first_to_second": self.sup_first_to_second,
            "sup_second_to_first": self.sup_second_to_first,
            "resolution": self.resolution,
        }


def hausdorff_local_report(x_set, y_set, x, r, samples: int = 256) -> HausdorffReport:
    if r <= 0:
        raise ValueError("radius must be positive")
    ball = Ball(np.asarray(x, dtype=float), float(r))
    xc = _clip_to_ball(x_set, ball)
    yc = _clip_to_ball(y_set, ball)
    sup_xy, gap_x = _one_sided_sup(xc, y_set, r, samples)
    sup_yx, gap_y = _one_sided_sup(yc, x_set, r, samples)
    value = (sup_xy + sup_yx) / r
    resolution = (gap_x + gap_y) / r  # dist(., S) is 1-Lipschitz in the sample point
    return HausdorffReport(float(value), float(sup_xy), float(sup_yx), float(resolution))


def hausdorff_local(x_set, y_set, x, r, samples: int = 256) -> float:
    """Normalized local Hausdorff distance d_{x,r}(X, Y): the sum of the two
    one-sided sup distances inside B(x, r), divided by r. Sups over an empty
    clipped side are 0 by convention."""
    return hausdorff_local_report(x_set, y_set, x, r, samples).value


# ---------------------------------------------------------------------------
# bounded-Lipschitz distance

@dataclass(frozen=True)
class BLDistanceReport:
    value: float
    method: str
    witness: object = None
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        w = self.witness
        if isinstance(w, np.ndarray):
            w = w.tolist()
        return {"value": self.value, "method": self.method, "witness": w,
                **{k: v for k, v in self.detail.items()}}


def _cost_matrix(v: DiscreteVarifold, w: DiscreteVarifold, chunk: int = 1 << 22) -> np.ndarray:
    pos = np.linalg.norm(v.positions[:, None, :] - w.positions[None, :, :], axis=2)
    a, b = len(v), len(w)
    gd = np.empty((a, b))
    rows_per = max(1, chunk // max(b * v.ambient_dim ** 2, 1))
    for s in range(0, a, rows_per):
        t = min(a, s + rows_per)
        gd[s:t] = grassmann_distance_matrix(v.frames[s:t], w.frames)
    return pos + gd


def _bl_exact(v: DiscreteVarifold, w: DiscreteVarifold) -> BLDistanceReport:
    mu, nu = v.masses, w.masses
    total = float(mu.sum() + nu.sum())
    if len(v) == 0 or len(w) == 0:
        return BLDistanceReport(total, "exact-LP", witness=[],
                                detail={"lp_status": "degenerate-empty-side"})
    cost = _cost_matrix(v, w)
    a, b = cost.shape
    c = (cost - 2.0).ravel()
    row = sp.kron(sp.eye(a, format="csr"), np.ones((1, b)), format="csr")
    col = sp.kron(np.ones((1, a)), sp.eye(b, format="csr"), format="csr")
    a_ub = sp.vstack([row, col], format="csr")
    b_ub = np.concatenate([mu, nu])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transshipment LP failed: {res.message}")
    value = total + float(res.fun)
    plan = res.x.reshape(a, b)
    nz = np.argwhere(plan > 1e-12)
    witness = [(int(i), int(j), float(plan[i, j])) for i, j in nz]
    return BLDistanceReport(max(value, 0.0), "exact-LP", witness=witness,
                            detail={"lp_status": "optimal"})


def _smooth_window(t):
    """1 for t <= 1, cubic falloff to 0 at t >= 1.5."""
    s = np.clip((1.5 - t) / 0.5, 0.0, 1.0)
    return np.where(t <= 1.0, 1.0, s * s * (3 - 2 * s))


def _position_features(n, r1):
    """[(name, eval(points)->vals, sup_abs, lip_x)] on support |x| <= r1."""
    feats = [("1", lambda p: np.ones(len(p)), 1.0, 0.0)]
    for i in range(n):
        feats.append((f"x{i}", lambda p, i=i: p[:, i] / r1, 1.0, 1.0 / r1))
    for i in range(n):
        for j in range(i, n):
            feats.append((f"x{i}*x{j}",
                          lambda p, i=i, j=j: p[:, i] * p[:, j] / r1 ** 2,
                          1.0, 2.0 / r1))
    dirs = [np.eye(n)[i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = (np.eye(n)[i] + np.eye(n)[j]) / np.sqrt(2)
            dirs.append(d)
            d2 = (np.eye(n)[i] - np.eye(n)[j]) / np.sqrt(2)
            dirs.append(d2)
    for di, d in enumerate(dirs):
        for freq in (1, 2):
            om = np.pi * freq / r1
            feats.append((f"sin{freq}_u{di}",
                          lambda p, d=d, om=om: np.sin(om * (p @ d)), 1.0, om))
            feats.append((f"cos{freq}_u{di}",
                          lambda p, d=d, om=om: np.cos(om * (p @ d)), 1.0, om))
    return feats


def _reference_planes(n, m):
    refs = []
    if m == 1:
        for i in range(n):
            refs.append((f"e{i}", axis_plane(n, [i])))
        for i in range(n):
            for j in range(i + 1, n):
                v = np.zeros(n); v[i] = 1; v[j] = 1
                refs.append((f"d{i}{j}+", Plane.from_span(v)))
                v2 = np.zeros(n); v2[i] = 1; v2[j] = -1
                refs.append((f"d{i}{j}-", Plane.from_span(v2)))
    else:
        import itertools
        for combo in itertools.combinations(range(n), m):
            refs.append(("e" + "".join(map(str, combo)), axis_plane(n, list(combo))))
    return refs[:12]


def _plane_features(n, m):
    """[(name, eval(frames)->vals, sup_abs, lip_T)] under the operator metric."""
    feats = [("1", lambda f: np.ones(len(f)), 1.0, 0.0)]

    def entry(f, k, l):
        p = np.einsum("aij,akj->aik", f, f)
        return p[:, k, l]

    for k in range(n):
        for l in range(k, n):
            feats.append((f"P{k}{l}", lambda f, k=k, l=l: entry(f, k, l), 1.0, 1.0))
    pairs = [(k, l) for k in range(n) for l in range(k, n)]
    for a in range(len(pairs)):
        for b in range(a, len(pairs)):
            (k1, l1), (k2, l2) = pairs[a], pairs[b]
            feats.append((f"P{k1}{l1}*P{k2}{l2}",
                          lambda f, k1=k1, l1=l1, k2=k2, l2=l2:
                          entry(f, k1, l1) * entry(f, k2, l2), 1.0, 2.0))
    for name, ref in _reference_planes(n, m):
        rf = ref.frame[None, :, :]
        feats.append((f"gd_{name}",
                      lambda f, rf=rf: grassmann_distance_matrix(f, rf)[:, 0], 1.0, 1.0))
        feats.append((f"gd2_{name}",
                      lambda f, rf=rf: grassmann_distance_matrix(f, rf)[:, 0] ** 2, 1.0, 2.0))
    return feats


def bl_dictionary_size(n, m) -> int:
    return len(_position_features(n, 1.0)) * len(_plane_features(n, m))


def _bl_dictionary(v: DiscreteVarifold, w: DiscreteVarifold, domain) -> BLDistanceReport:
    n, m = v.ambient_dim, v.dim
    all_pos = [p for var in (v, w) if len(var) for p in (var.positions,)]
    r0 = max([1.0] + [float(np.linalg.norm(p, axis=1).max()) for p in all_pos])
    if domain is not None:
        r0 = max(r0, float(np.linalg.norm(domain.center) + domain.radius))
    r1 = 1.5 * r0
    lip_w = 3.0 / r0

    pos_feats = _position_features(n, r1)
    plane_feats = _plane_features(n, m)

    def tables(var):
        if len(var) == 0:
            return (np.zeros((len(pos_feats), 0)), np.zeros((len(plane_feats), 0)),
                    np.zeros(0))
        window = _smooth_window(np.linalg.norm(var.positions, axis=1) / r0)
        fp = np.stack([f(var.positions) for _, f, _, _ in pos_feats])
        ft = np.stack([g(var.frames) for _, g, _, _ in plane_feats])
        return fp, ft, window * var.masses

    fp_v, ft_v, wm_v = tables(v)
    fp_w, ft_w, wm_w = tables(w)
    s_v = (fp_v * wm_v) @ ft_v.T if len(v) else np.zeros((len(pos_feats), len(plane_feats)))
    s_w = (fp_w * wm_w) @ ft_w.T if len(w) else np.zeros((len(pos_feats), len(plane_feats)))
    diff = np.abs(s_v - s_w)

    sup_f = np.array([s for _, _, s, _ in pos_feats])
    lip_f = np.array([l for _, _, _, l in pos_feats])
    sup_g = np.array([s for _, _, s, _ in plane_feats])
    lip_g = np.array([l for _, _, _, l in plane_feats])
    sup_fg = np.outer(sup_f, sup_g)
    lip_x = np.outer(sup_f * lip_w + lip_f, sup_g)   # window adds its slope
    lip_t = np.outer(sup_f, lip_g)
    norm = np.maximum(sup_fg, np.maximum(lip_x, lip_t))
    norm = np.where(norm > 0, norm, 1.0)
    vals = diff / norm
    idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
    witness = f"{pos_feats[idx[0]][0]} x {plane_feats[idx[1]][0]}"
    return BLDistanceReport(float(vals[idx]), "dictionary-lower-bound", witness=witness,
                            detail={"dictionary_size": int(vals.size)})


def bl_distance(v: DiscreteVarifold, w: DiscreteVarifold, method: str = "exact",
                domain: Ball = None) -> BLDistanceReport:
    """Bounded-Lipschitz distance between two discrete varifolds.

    ``method``: "exact" solves the transshipment LP (a metric, equal to the
    sup over |phi| <= 1 with Lipschitz constant <= 1 under the product
    metric); "dictionary" evaluates the published test-function dictionary
    and returns a guaranteed lower bound of the exact value.
    """
    if (v.ambient_dim, v.dim) != (w.ambient_dim, w.dim):
        raise ValueError("varifold dimensions differ")
    if method == "exact":
        return _bl_exact(v, w)
    if method == "dictionary":
        return _bl_dictionary(v, w, domain)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# projected mass and the filling check

def projected_mass(e: SimplicialSet, x, r: float, t: Plane, method: str = "exact",
                   rng=None) -> float:
    """m-measure of the image set T_proj((E ∩ B(x,r) - x)/r), overlaps
    counted once (it is the measure of an image, not a mass pushforward).

    m = 1: exact union of projected intervals on the line. m = 2: exact
    planar sweep over the projected triangles, or Monte Carlo fallback
    (``method="montecarlo"``) with standard error below 1e-3 * omega_m.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    if t.dim != e.dim or t.ambient_dim != e.ambient_dim:
        raise ValueError("projection plane must match the set's (n, m)")
    clipped = restrict(e, Ball(np.asarray(x, dtype=float), float(r)))
    if clipped.is_empty():
        return 0.0
    unit = rescale(clipped, x, r)
    coords = unit.vertices @ t.frame  # (V, m) coordinates inside the plane
    if e.dim == 1:
        iv = np.sort(coords[unit.simplices][:, :, 0], axis=1)
        return interval_union_length(iv)
    # project the convex clipped regions as whole polygons; projections of
    # convex planar regions stay convex, and the sweep is linear in their
    # boundary size (fanning them into triangles first would not be)
    loops = unit.diagnostics.get("clip_polygons")
    if loops is not None:
        polys = [np.asarray(p) @ t.frame for p in loops]
    else:
        polys = list(coords[unit.simplices])
    if method == "exact":
        return polygon_union_area(polys)
    if method == "montecarlo":
        return _mc_union_area(np.stack([p[[0, i, i + 1]] for p in polys
                                        for i in range(1, len(p) - 1)]), rng)
    raise ValueError(f"unknown method {method!r}")


def _mc_union_area(tris, rng):
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    lo = tris.reshape(-1, 2).min(axis=0)
    hi = tris.reshape(-1, 2).max(axis=0)
    box = float(np.prod(hi - lo))
    if box == 0.0:
        return 0.0
    om = unit_ball_volume(2)
    n = int(np.ceil((0.5 * box / (MC_TARGET_SE * om)) ** 2))
    n = min(max(n, 10_000), 4_000_000)
    pts = lo + rng.random((n, 2)) * (hi - lo)
    inside = np.zeros(n, dtype=bool)
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    den = ((v1[:, 1] - v2[:, 1]) * (v0[:, 0] - v2[:, 0])
           + (v2[:, 0] - v1[:, 0]) * (v0[:, 1] - v2[:, 1]))
    ok = np.abs(den) > 1e-15
    for i in np.nonzero(ok)[0]:
        rem = ~inside
        if not rem.any():
            break
        p = pts[rem]
        l1 = ((v1[i, 1] - v2[i, 1]) * (p[:, 0] - v2[i, 0])
              + (v2[i, 0] - v1[i, 0]) * (p[:, 1] - v2[i, 1])) / den[i]
        l2 = ((v2[i, 1] - v0[i, 1]) * (p[:, 0] - v2[i, 0])
              + (v0[i, 0] - v2[i, 0]) * (p[:, 1] - v2[i, 1])) / den[i]
        l3 = 1.0 - l1 - l2
        hit = (l1 >= 0) & (l2 >= 0) & (l3 >= 0)
        idx = np.nonzero(rem)[0][hit]
        inside[idx] = True
    return box * float(inside.mean())


@dataclass(frozen=True)
class FillingReport:
    """Table of projected masses over (k, r) with a limit-filling verdict.

    ``verdict`` is HOLDS when, for every radius, the values stabilize at or
    above (1 - tol) * omega_m from some scheduled k onward and the per-radius
    tail infima do not decay as r shrinks; FAILS when some radius never
    stabilizes; INCONCLUSIVE when levels stabilize but the radius trend
    degrades.
    """

    rows: tuple  # (k, r, value)
    radii: tuple
    k_schedule: tuple
    k_start: dict
    tail_inf: dict
    omega: float
    tol: float
    verdict: str

    @property
    def holds(self) -> bool:
        return self.verdict == "HOLDS"

    def to_dict(self):
        return {
            "rows": [list(r) for r in self.rows],
            "radii": list(self.radii),
            "k_schedule": list(self.k_schedule),
            "k_start": {str(k): v for k, v in self.k_start.items()},
            "tail_inf": {str(k): v for k, v in self.tail_inf.items()},
            "omega": self.omega,
            "tol": self.tol,
            "verdict": self.verdict,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "r", "value", "flag"])
            for k, r, val in self.rows:
                flag = "ok" if val >= (1 - self.tol) * self.omega else "low"
                writer.writerow([k, r, val, flag])


def filling_check(make_set, x, t: Plane, radii, k_schedule, tol: float = 0.02,
                  method: str = "exact") -> FillingReport:
    """Evaluate projected_mass(E_k, x, r, T) over a (k, r) grid and decide
    whether the projections fill the unit disk of T in the double limit.

    ``make_set`` maps a scheduled k to the k-th set. ``radii`` must be
    strictly decreasing.
    """
    radii = [float(r) for r in radii]
    if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    ks = [int(k) for k in k_schedule]
    sets = {k: make_set(k) for k in ks}
    om = unit_ball_volume(t.dim)
    rows = []
    values = {}
    for k in ks:
        for r in radii:
            val = projected_mass(sets[k], x, r, t, method=method)
            rows.append((k, r, val))
            values[(k, r)] = val
    threshold = (1 - tol) * om
    k_start, tail_inf = {}, {}
    for r in radii:
        start = None
        for i, k in enumerate(ks):
            if all(values[(kk, r)] >= threshold for kk in ks[i:]):
                start = k
                break
        k_start[r] = start
        tail_inf[r] = (min(values[(kk, r)] for kk in ks if kk >= start)
                       if start is not None else min(values[(kk, r)] for kk in ks))
    if any(k_start[r] is None for r in radii):
        verdict = "FAILS"
    else:
        trend_ok = all(tail_inf[r2] >= tail_inf[r1] - tol * om
                       for r1, r2 in zip(radii, radii[1:]))
        verdict = "HOLDS" if trend_ok else "INCONCLUSIVE"
    return FillingReport(tuple(rows), tuple(radii), tuple(ks), k_start, tail_inf,
                         om, tol, verdict)
