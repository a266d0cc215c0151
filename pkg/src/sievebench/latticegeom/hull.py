"""Exact convex hulls of lattice point sets in dimensions 1 to 3.

Facets are integer inequalities ``n . y <= c`` with primitive ``n``;
lower-dimensional hulls also carry integer equalities ``n . y = c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from ..errors import ValidationError

Vec = tuple[int, ...]


def _sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def _dot(p, q):
    return sum(a * b for a, b in zip(p, q))


def _cross(p, q):
    return (p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0])


def _primitive(v) -> Vec:
    g = reduce(math.gcd, (abs(int(t)) for t in v), 0)
    return tuple(int(t) // g for t in v) if g else tuple(int(t) for t in v)


def _cross2(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def monotone_chain(points: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Counter-clockwise hull vertices (no collinear points); exact integer predicates."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross2(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross2(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _orthogonal_basis(direction: Vec) -> list[Vec]:
    """Two independent integer vectors orthogonal to a nonzero 3-vector."""
    cands = [_cross(direction, e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    cands = [c for c in cands if any(c)]
    first = cands[0]
    second = next(c for c in cands[1:] if any(_cross(first, c)))
    return [_primitive(first), _primitive(second)]


@dataclass(frozen=True)
class LatticeHull:
    """Convex hull of a finite lattice point set, with exact facets and volume."""

    points: tuple[Vec, ...]
    d: int
    dim: int
    vertices: tuple[Vec, ...]
    facets: tuple[tuple[Vec, int], ...]
    equalities: tuple[tuple[Vec, int], ...] = ()
    volume: Fraction = Fraction(0)
    facet_polygons: tuple = field(default=(), repr=False, compare=False)

    @property
    def full_dimensional(self) -> bool:
        return self.dim == self.d

    def contains(self, y, scale=1, center=None, shrink=0) -> bool:
        """Is y in t*((1 - g) C + g x0)?  (t = scale, g = shrink, x0 = center)."""
        y = [Fraction(v) for v in y]
        t, g = Fraction(scale), Fraction(shrink)
        cen = [Fraction(v) for v in center] if center is not None else [Fraction(0)] * self.d
        for n, c in self.equalities:
            if _dot(n, y) != t * ((1 - g) * c + g * _dot(n, cen)):
                return False
        for n, c in self.facets:
            if _dot(n, y) > t * ((1 - g) * c + g * _dot(n, cen)):
                return False
        return True

    @cached_property
    def bounding_box(self) -> tuple[Vec, Vec]:
        arr = np.asarray(self.vertices, dtype=object)
        return tuple(int(v) for v in arr.min(axis=0)), tuple(int(v) for v in arr.max(axis=0))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "dim": self.dim,
            "vertices": [list(v) for v in self.vertices],
            "facets": [{"normal": list(n), "offset": c} for n, c in self.facets],
            "equalities": [{"normal": list(n), "offset": c} for n, c in self.equalities],
            "volume": self.volume,
        }


def _as_points(points: Iterable) -> tuple[tuple[Vec, ...], int]:
    pts = []
    for p in points:
        if isinstance(p, (int, np.integer)):
            p = (p,)
        t = tuple(p)
        for v in t:
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ValidationError(f"lattice point coordinates must be integers, got {p!r}")
        pts.append(tuple(int(v) for v in t))
    if not pts:
        raise ValidationError("need at least one point")
    d = len(pts[0])
    if d not in (1, 2, 3) or any(len(p) != d for p in pts):
        raise ValidationError("points must all have the same dimension 1, 2 or 3")
    return tuple(sorted(set(pts))), d


def _affine_rank(pts: Sequence[Vec]) -> tuple[int, list[Vec]]:
    """Affine dimension and a maximal independent set of difference vectors."""
    base = pts[0]
    chosen: list[Vec] = []
    for p in pts[1:]:
        v = _sub(p, base)
        if not any(v):
            continue
        if not chosen:
            chosen.append(v)
        elif len(chosen) == 1:
            if len(v) == 1:
                continue
            if len(v) == 2:
                if v[0] * chosen[0][1] - v[1] * chosen[0][0]:
                    chosen.append(v)
            elif any(_cross(chosen[0], v)):
                chosen.append(v)
        elif len(chosen) == 2 and len(v) == 3:
            if _dot(_cross(chosen[0], chosen[1]), v):
                chosen.append(v)
                break
        if len(chosen) == len(base):
            break
    return len(chosen), chosen


def convex_hull(points: Iterable) -> LatticeHull:
    pts, d = _as_points(points)
    dim, dirs = _affine_rank(pts)
    if d == 1:
        return _hull_1d(pts)
    if d == 2:
        return _hull_2d(pts, dim, dirs)
    return _hull_3d(pts, dim, dirs)


def _hull_1d(pts) -> LatticeHull:
    lo, hi = pts[0][0], pts[-1][0]
    if lo == hi:
        return LatticeHull(pts, 1, 0, ((lo,),), (), (((1,), lo),), Fraction(0))
    return LatticeHull(pts, 1, 1, ((lo,), (hi,)), (((-1,), -lo), ((1,), hi)), (), Fraction(hi - lo))


def _segment_description(pts, dirs, d) -> tuple[tuple[Vec, ...], list, list]:
    e = _primitive(dirs[0])
    proj = sorted(pts, key=lambda p: _dot(e, p))
    a, b = proj[0], proj[-1]
    facets = [(tuple(-t for t in e), -_dot(e, a)), (e, _dot(e, b))]
    if d == 2:
        n = (-e[1], e[0])
        eqs = [(n, _dot(n, a))]
    else:
        eqs = [(n, _dot(n, a)) for n in _orthogonal_basis(e)]
    return (a, b), facets, eqs


def _point_description(p, d):
    eqs = [(tuple(1 if i == j else 0 for j in range(d)), p[i]) for i in range(d)]
    return LatticeHull((p,), d, 0, (p,), (), tuple(eqs), Fraction(0))


def _hull_2d(pts, dim, dirs) -> LatticeHull:
    if dim == 0:
        return _point_description(pts[0], 2)
    if dim == 1:
        verts, facets, eqs = _segment_description(pts, dirs, 2)
        return LatticeHull(pts, 2, 1, verts, tuple(facets), tuple(eqs), Fraction(0))
    ring = monotone_chain(pts)
    facets = []
    area2 = 0
    for i, p in enumerate(ring):
        q = ring[(i + 1) % len(ring)]
        n = _primitive((q[1] - p[1], p[0] - q[0]))
        facets.append((n, _dot(n, p)))
        area2 += p[0] * q[1] - q[0] * p[1]
    return LatticeHull(pts, 2, 2, tuple(ring), tuple(facets), (), Fraction(area2, 2))


def _planar_ring(points_on_plane: Sequence[Vec], normal: Vec) -> list[Vec]:
    """Hull polygon of coplanar 3D points, ordered counter-clockwise seen from +normal."""
    drop = max(range(3), key=lambda i: abs(normal[i]))
    keep = [i for i in range(3) if i != drop]
    lookup = {(p[keep[0]], p[keep[1]]): p for p in points_on_plane}
    ring2 = monotone_chain(list(lookup))
    ring = [lookup[q] for q in ring2]
    # projection onto (keep0, keep1) preserves orientation iff normal[drop] has the
    # sign of the right-handed ordering of the remaining axes
    sign = normal[drop] if drop != 1 else -normal[drop]
    if sign < 0:
        ring.reverse()
    return ring


def _plane_description(pts, dirs) -> LatticeHull:
    n = _primitive(_cross(dirs[0], dirs[1]))
    c = _dot(n, pts[0])
    ring = _planar_ring(pts, n)
    facets = []
    for i, p in enumerate(ring):
        q = ring[(i + 1) % len(ring)]
        m = _primitive(_cross(_sub(q, p), n))
        facets.append((m, _dot(m, p)))
    return LatticeHull(pts, 3, 2, tuple(ring), tuple(facets), ((n, c),), Fraction(0))


def _supporting_planes_brute(pts) -> set[tuple[Vec, int]]:
    planes = set()
    for a, b, c in combinations(pts, 3):
        n = _cross(_sub(b, a), _sub(c, a))
        if not any(n):
            continue
        n = _primitive(n)
        off = _dot(n, a)
        vals = [_dot(n, p) - off for p in pts]
        if all(v <= 0 for v in vals):
            planes.add((n, off))
        elif all(v >= 0 for v in vals):
            planes.add((tuple(-t for t in n), -off))
    return planes


def _supporting_planes_qhull(pts) -> set[tuple[Vec, int]] | None:
    try:
        from scipy.spatial import ConvexHull, QhullError
    except ImportError:  # pragma: no cover
        return None
    arr = np.asarray(pts, dtype=np.float64)
    try:
        qh = ConvexHull(arr)
    except QhullError:
        return None
    P = np.asarray(pts, dtype=object)
    planes = set()
    for simplex in qh.simplices:
        a, b, c = (pts[i] for i in simplex)
        n = _cross(_sub(b, a), _sub(c, a))
        if not any(n):
            return None
        n = _primitive(n)
        off = _dot(n, a)
        vals = P.dot(np.asarray(n, dtype=object)) - off
        if all(v <= 0 for v in vals):
            planes.add((n, off))
        elif all(v >= 0 for v in vals):
            planes.add((tuple(-t for t in n), -off))
        else:
            return None
    return planes


def _closed(polys: list[list[Vec]]) -> bool:
    """Every polygon edge is shared by exactly two polygons, in opposite directions."""
    seen: dict = {}
    for ring in polys:
        for i, p in enumerate(ring):
            q = ring[(i + 1) % len(ring)]
            seen[(p, q)] = seen.get((p, q), 0) + 1
    return all(cnt == 1 and seen.get((q, p)) == 1 for (p, q), cnt in seen.items())


def _hull_3d(pts, dim, dirs) -> LatticeHull:
    if dim == 0:
        return _point_description(pts[0], 3)
    if dim == 1:
        verts, facets, eqs = _segment_description(pts, dirs, 3)
        return LatticeHull(pts, 3, 1, verts, tuple(facets), tuple(eqs), Fraction(0))
    if dim == 2:
        return _plane_description(pts, dirs)

    polys = None
    planes = _supporting_planes_qhull(pts) if len(pts) > 12 else None
    for attempt in ("qhull", "brute"):
        if attempt == "brute":
            if len(pts) > 200 and planes is not None:
                break
            planes = _supporting_planes_brute(pts)
        if planes is None:
            continue
        polys = []
        for n, off in sorted(planes):
            on = [p for p in pts if _dot(n, p) == off]
            polys.append(_planar_ring(on, n))
        if _closed(polys):
            break
        polys = None
    if polys is None:
        raise RuntimeError("3D hull certification failed")

    facets = tuple(sorted(planes))
    vertices = tuple(sorted({p for ring in polys for p in ring}))
    apex = vertices[0]
    vol6 = 0
    for ring in polys:
        if apex in ring:
            continue
        w0 = ring[0]
        for i in range(1, len(ring) - 1):
            a, b = ring[i], ring[i + 1]
            vol6 += abs(_dot(_sub(w0, apex), _cross(_sub(a, apex), _sub(b, apex))))
    return LatticeHull(pts, 3, 3, vertices, facets, (), Fraction(vol6, 6), tuple(map(tuple, polys)))
