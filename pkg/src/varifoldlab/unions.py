"""Measures of unions of overlapping pieces, counting overlaps once.

These back every image-set measure in the library: projections of clipped
sets onto a plane and pushforward images of deformations. Intervals merge
by sort-and-sweep. Planar unions take convex polygons (triangles are
3-gons) and use a vertical trapezoid decomposition: the x-axis is cut at
every vertex and every proper crossing between edges of distinct polygons,
so inside each strip every polygon's cross-section is a single interval
with affine endpoints, and the union length is affine in x; each strip
contributes exactly width * union-length-at-midpoint.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "interval_union_length",
    "polygon_union_area",
    "triangle_union_area",
    "segments_union_measure",
    "triangles_union_measure",
]


def interval_union_length(intervals, merge_tol=None) -> float:
    """Total length of a union of closed 1-d intervals [lo, hi]."""
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if len(iv) == 0:
        return 0.0
    lo = np.minimum(iv[:, 0], iv[:, 1])
    hi = np.maximum(iv[:, 0], iv[:, 1])
    if merge_tol is None:
        span = float(hi.max() - lo.min())
        merge_tol = 1e-12 * (1.0 + span)
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    total = 0.0
    cur_lo, cur_hi = lo[0], hi[0]
    for i in range(1, len(lo)):
        if lo[i] > cur_hi + merge_tol:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo[i], hi[i]
        else:
            cur_hi = max(cur_hi, hi[i])
    total += cur_hi - cur_lo
    return float(total)


def _polygon_area_signed(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _clean_polygons(polys):
    """Drop consecutive duplicate vertices and degenerate polygons."""
    out = []
    for p in polys:
        p = np.asarray(p, dtype=float).reshape(-1, 2)
        if len(p) >= 2:
            keep = np.ones(len(p), dtype=bool)
            keep[1:] = np.linalg.norm(np.diff(p, axis=0), axis=1) > 1e-15
            if np.linalg.norm(p[0] - p[-1]) <= 1e-15 and keep[-1]:
                keep[-1] = False
            p = p[keep]
        if len(p) >= 3 and abs(_polygon_area_signed(p)) > 1e-14:
            out.append(p)
    return out


def _inter_polygon_crossings(edges, poly_ids):
    """x-coordinates of proper crossings between edges of distinct polygons.

    Edges of the same (convex) polygon never properly cross; pairs are
    prefiltered by an x-interval sweep plus y-bbox overlap.
    """
    e = edges
    n = len(e)
    if n < 2:
        return np.zeros(0)
    xmin = e[:, :, 0].min(axis=1)
    xmax = e[:, :, 0].max(axis=1)
    ymin = e[:, :, 1].min(axis=1)
    ymax = e[:, :, 1].max(axis=1)
    order = np.argsort(xmin, kind="stable")
    xmin_s, xmax_s = xmin[order], xmax[order]
    hi = np.searchsorted(xmin_s, xmax_s, side="right")
    counts = np.maximum(hi - np.arange(n) - 1, 0)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0)
    ii = np.repeat(np.arange(n), counts)
    jj = np.concatenate([np.arange(i + 1, h)
                         for i, h in zip(np.arange(n), hi) if h > i + 1])
    a, b = order[ii], order[jj]
    keep = poly_ids[a] != poly_ids[b]
    keep &= (ymin[a] <= ymax[b]) & (ymin[b] <= ymax[a])
    a, b = a[keep], b[keep]
    if len(a) == 0:
        return np.zeros(0)
    p = e[a, 0]
    r = e[a, 1] - e[a, 0]
    q = e[b, 0]
    s = e[b, 1] - e[b, 0]
    denom = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    ok = np.abs(denom) > 1e-15
    if not ok.any():
        return np.zeros(0)
    p, r, q, s, denom = p[ok], r[ok], q[ok], s[ok], denom[ok]
    qp = q - p
    t1 = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
    t2 = (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / denom
    hit = (t1 > 1e-12) & (t1 < 1 - 1e-12) & (t2 > 1e-12) & (t2 < 1 - 1e-12)
    return p[hit, 0] + t1[hit] * r[hit, 0]


def polygon_union_area(polys) -> float:
    """Area of a union of convex 2-d polygons, overlaps counted once."""
    polys = _clean_polygons(polys)
    if not polys:
        return 0.0

    edges_list, poly_ids_list = [], []
    for pid, p in enumerate(polys):
        k = len(p)
        seg = np.stack([p, np.roll(p, -1, axis=0)], axis=1)  # (k, 2, 2)
        edges_list.append(seg)
        poly_ids_list.append(np.full(k, pid))
    edges = np.concatenate(edges_list, axis=0)
    poly_ids = np.concatenate(poly_ids_list)

    all_x = np.concatenate([p[:, 0] for p in polys])
    xs = np.concatenate([all_x, _inter_polygon_crossings(edges, poly_ids)])
    xs = np.sort(xs)
    span = xs[-1] - xs[0]
    if span <= 0:
        return 0.0
    keep = np.concatenate([[True], np.diff(xs) > 1e-13 * (1 + span)])
    xs = xs[keep]
    if len(xs) < 2:
        return 0.0
    mids = 0.5 * (xs[:-1] + xs[1:])
    widths = np.diff(xs)

    # edge -> strip incidences (an edge covers a strip fully or not at all)
    tol = 1e-13 * (1 + span)
    exmin = edges[:, :, 0].min(axis=1)
    exmax = edges[:, :, 0].max(axis=1)
    i0 = np.searchsorted(xs, exmin - tol, side="left")
    i1 = np.searchsorted(xs, exmax + tol, side="right") - 2
    counts = np.maximum(i1 - i0 + 1, 0)
    if counts.sum() == 0:
        return 0.0
    eids = np.repeat(np.arange(len(edges)), counts)
    strip_ids = np.concatenate(
        [np.arange(lo, lo + c) for lo, c in zip(i0, counts) if c > 0])
    xm = mids[strip_ids]
    p0, p1 = edges[eids, 0], edges[eids, 1]
    dx = p1[:, 0] - p0[:, 0]
    t = (xm - p0[:, 0]) / np.where(dx != 0, dx, 1.0)
    yv = p0[:, 1] + t * (p1[:, 1] - p0[:, 1])
    pv = poly_ids[eids]

    # reduce to one [lo, hi] interval per (strip, polygon)
    order = np.lexsort((yv, pv, strip_ids))
    sid, pid, y = strip_ids[order], pv[order], yv[order]
    group_start = np.concatenate([[True], (sid[1:] != sid[:-1]) | (pid[1:] != pid[:-1])])
    starts_idx = np.flatnonzero(group_start)
    ends_idx = np.concatenate([starts_idx[1:], [len(y)]]) - 1
    lo_iv = y[starts_idx]           # sorted within group: first is min
    hi_iv = np.maximum.reduceat(y, starts_idx)
    g_sid = sid[starts_idx]

    # per-strip interval union
    order2 = np.lexsort((lo_iv, g_sid))
    sid2, lo2, hi2 = g_sid[order2], lo_iv[order2], hi_iv[order2]
    yspan = float(hi2.max() - lo2.min()) if len(lo2) else 0.0
    eps = 1e-12 * (1 + yspan)
    total = 0.0
    strip_starts = np.flatnonzero(np.concatenate([[True], sid2[1:] != sid2[:-1]]))
    strip_ends = np.concatenate([strip_starts[1:], [len(sid2)]])
    for a, b in zip(strip_starts, strip_ends):
        w = widths[sid2[a]]
        cm = np.maximum.accumulate(hi2[a:b])
        gap = np.flatnonzero(lo2[a + 1:b] > cm[:-1] + eps) + 1
        run_starts = np.concatenate([[0], gap])
        run_ends = np.concatenate([gap - 1, [b - a - 1]])
        ulen = float(np.sum(cm[run_ends] - lo2[a:b][run_starts]))
        total += w * ulen
    return float(total)


def triangle_union_area(triangles) -> float:
    """Area of the union of 2-d triangles, overlaps counted once."""
    tris = np.asarray(triangles, dtype=float)
    if tris.size == 0:
        return 0.0
    return polygon_union_area(list(tris.reshape(-1, 3, 2)))


def _canonical_line_key(direction, anchor, decimals=9):
    """Hashable key identifying the affine line through anchor with the
    given direction, canonicalized so collinear segments share a key."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    for comp in d:
        if abs(comp) > 1e-9:
            if comp < 0:
                d = -d
            break
    offset = anchor - np.dot(anchor, d) * d
    return tuple(np.round(d, decimals)) + tuple(np.round(offset, decimals))


def segments_union_measure(segments) -> float:
    """Length of a union of segments in R^n, overlaps counted once.

    Collinear segments (shared affine line, up to 1e-9 rounding) are merged
    by interval union; segments on distinct lines can only overlap in
    measure zero, so their lengths add.
    """
    groups = {}
    for seg in segments:
        p, q = np.asarray(seg[0], dtype=float), np.asarray(seg[1], dtype=float)
        d = q - p
        ln = np.linalg.norm(d)
        if ln <= 1e-14:
            continue
        key = _canonical_line_key(d, p)
        u = d / ln
        for comp in u:
            if abs(comp) > 1e-9:
                if comp < 0:
                    u = -u
                break
        t0, t1 = float(np.dot(p, u)), float(np.dot(q, u))
        groups.setdefault(key, []).append((min(t0, t1), max(t0, t1)))
    total = 0.0
    for iv in groups.values():
        if len(iv) == 1:
            total += iv[0][1] - iv[0][0]
        else:
            total += interval_union_length(iv)
    return float(total)


def _canonical_plane_key(tri, decimals=9):
    a, b, c = tri
    nrm = np.cross(b - a, c - a) if len(a) == 3 else None
    if nrm is None:
        return ("planar2d",)
    nn = np.linalg.norm(nrm)
    nrm = nrm / nn
    for comp in nrm:
        if abs(comp) > 1e-9:
            if comp < 0:
                nrm = -nrm
            break
    off = float(np.dot(a, nrm))
    return tuple(np.round(nrm, decimals)) + (round(off, decimals),)


def triangles_union_measure(triangles) -> float:
    """Area of a union of triangles in R^2 or R^3, overlaps counted once.

    Coplanar triangles (shared affine plane up to 1e-9 rounding) are merged
    by the planar sweep; distinct planes intersect in measure zero."""
    tris = [np.asarray(t, dtype=float) for t in triangles]
    if not tris:
        return 0.0
    groups = {}
    for t in tris:
        groups.setdefault(_canonical_plane_key(t), []).append(t)
    total = 0.0
    for key, group in groups.items():
        if len(group) == 1:  # nothing to merge
            a, b, c = group[0]
            total += 0.5 * np.linalg.norm(np.cross(b - a, c - a))
            continue
        t0 = group[0]
        a0 = t0[0]
        e1 = t0[1] - t0[0]
        u = e1 / np.linalg.norm(e1)
        e2 = t0[2] - t0[0]
        w = e2 - np.dot(e2, u) * u
        nw = np.linalg.norm(w)
        if nw <= 1e-14 and len(group) > 1:
            for alt in group[1:]:
                e2 = alt[2] - alt[0]
                w = e2 - np.dot(e2, u) * u
                nw = np.linalg.norm(w)
                if nw > 1e-14:
                    break
        if nw <= 1e-14:
            continue
        v = w / nw
        flat = [np.column_stack([(t - a0) @ u, (t - a0) @ v]) for t in group]
        total += polygon_union_area(flat)
    return float(total)
