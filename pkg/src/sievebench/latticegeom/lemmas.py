"""Boxes, inscribed boxes, boundary shells, regularization and Shapley-Folkman."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Iterable, Sequence

import numpy as np

from .._exact import to_fraction
from ..errors import DimensionError, DomainError, ResourceError, ValidationError
from .hull import LatticeHull, Vec, _as_points, convex_hull
from .simplex import basic_feasible_solution, linprog_max

ENUMERATION_BUDGET = 10**8
SF_FALLBACK_BUDGET = 10**6
INSCRIBE_SCAN_BUDGET = 10**6


@dataclass(frozen=True)
class LatticeBox:
    """[-N_1, N_1] x ... x [-N_d, N_d]."""

    half_widths: tuple[int, ...]

    def __post_init__(self):
        hw = tuple(self.half_widths)
        if not 1 <= len(hw) <= 3:
            raise ValidationError("box dimension must be 1, 2 or 3")
        for n in hw:
            if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
                raise ValidationError(f"half widths must be positive integers, got {hw}")
        object.__setattr__(self, "half_widths", tuple(int(n) for n in hw))

    @property
    def d(self) -> int:
        return len(self.half_widths)

    @property
    def count(self) -> int:
        return math.prod(2 * n + 1 for n in self.half_widths)

    @property
    def volume(self) -> int:
        return math.prod(2 * n for n in self.half_widths)

    def contains(self, p) -> bool:
        return all(abs(t) <= n for t, n in zip(p, self.half_widths))

    def corners(self) -> list[Vec]:
        return [tuple(s * n for s, n in zip(signs, self.half_widths))
                for signs in product((-1, 1), repeat=self.d)]

    def points(self) -> list[Vec]:
        return list(product(*(range(-n, n + 1) for n in self.half_widths)))

    def scaled_radii(self, eps) -> tuple[int, ...]:
        """Half widths of eps*P intersected with the lattice: floor(eps N_i)."""
        eps = to_fraction(eps)
        return tuple(math.floor(eps * n) for n in self.half_widths)

    def scaled_count(self, eps) -> int:
        """|P_eps|."""
        return math.prod(2 * r + 1 for r in self.scaled_radii(eps))


def _box_points(A: Iterable, box: LatticeBox) -> tuple[Vec, ...]:
    pts, d = _as_points(A) if A else ((), box.d)
    if pts and d != box.d:
        raise ValidationError(f"points have dimension {d}, box has {box.d}")
    return pts


# -- volume -----------------------------------------------------------------


@dataclass(frozen=True)
class VolumeBound:
    volume: Fraction
    c_measured: Fraction
    density: Fraction
    premise_holds: bool
    bound_holds: bool

    def to_dict(self) -> dict:
        return {"volume": self.volume, "c_measured": self.c_measured, "density": self.density,
                "premise_holds": self.premise_holds, "bound_holds": self.bound_holds}


def check_volume_bound(A, box: LatticeBox, alpha) -> VolumeBound:
    """vol(conv A) and vol/|P|; the premise |A| >= alpha |P| is reported, not enforced."""
    alpha = to_fraction(alpha)
    pts = _box_points(A, box)
    if not pts:
        raise DomainError("A is empty")
    hull = convex_hull(pts)
    c = hull.volume / box.count
    density = Fraction(len(pts), box.count)
    premise = density >= alpha and all(box.contains(p) for p in pts)
    return VolumeBound(hull.volume, c, density, premise, hull.volume > 0)


# -- inscribed box ----------------------------------------------------------


@dataclass(frozen=True)
class InscribedBox:
    x0: tuple[int, ...]
    beta: Fraction
    lp_x0: tuple[Fraction, ...]
    lp_beta: Fraction
    certified: bool

    def to_dict(self) -> dict:
        return {"x0": list(self.x0), "beta": self.beta, "lp_x0": list(self.lp_x0),
                "lp_beta": self.lp_beta, "certified": self.certified}


def _box_slack(hull: LatticeHull, box: LatticeBox, x0, beta) -> bool:
    """All 2^d corners of x0 + beta*P satisfy every facet."""
    for corner in box.corners():
        y = [Fraction(a) + beta * b for a, b in zip(x0, corner)]
        if not hull.contains(y):
            return False
    return True


def _beta_at(hull: LatticeHull, box: LatticeBox, z) -> Fraction:
    best = None
    for n, c in hull.facets:
        spread = sum(abs(a) * w for a, w in zip(n, box.half_widths))
        room = Fraction(c - sum(a * b for a, b in zip(n, z)), spread)
        best = room if best is None else min(best, room)
    return best


def inscribe_box(A, box: LatticeBox) -> InscribedBox:
    """Largest beta with x0 + beta*P inside conv(A) for a lattice point x0.

    First the exact LP over real x0 (x0 = x+ - x-), then x0 is rounded to the
    best of the surrounding lattice points and beta shrunk to the largest
    value that still fits there.
    """
    pts = _box_points(A, box)
    if not pts:
        raise DimensionError("A is empty")
    hull = convex_hull(pts)
    if not hull.full_dimensional:
        raise DimensionError(f"hull has affine dimension {hull.dim} < {hull.d}")
    d = box.d
    rows, rhs = [], []
    for n, c in hull.facets:
        spread = sum(abs(a) * w for a, w in zip(n, box.half_widths))
        rows.append(list(n) + [-a for a in n] + [spread])
        rhs.append(c)
    res = linprog_max([0] * (2 * d) + [1], A_ub=rows, b_ub=rhs)
    if res.status != "optimal":  # pragma: no cover - bounded, feasible by construction
        raise RuntimeError(f"inscribed box LP returned {res.status}")
    lp_x0 = tuple(res.x[i] - res.x[d + i] for i in range(d))
    lp_beta = res.x[2 * d]

    def pick(candidates, best_z=None, best_beta=None):
        for z in candidates:
            b = _beta_at(hull, box, z)
            if best_beta is None or b > best_beta or (b == best_beta and z < best_z):
                best_z, best_beta = z, b
        return best_z, best_beta

    best_z, best_beta = pick(tuple(math.floor(t) + o for t, o in zip(lp_x0, offs))
                             for offs in product((0, 1), repeat=d))
    if best_beta < 0:
        # thin hull: no rounding of the LP point lies inside, so scan its lattice points
        lo, hi = hull.bounding_box
        if math.prod(h - l + 1 for l, h in zip(lo, hi)) <= INSCRIBE_SCAN_BUDGET:
            best_z, best_beta = pick(product(*(range(l, h + 1) for l, h in zip(lo, hi))))
        else:
            best_z, best_beta = pick(hull.vertices, best_z, best_beta)
    beta = max(best_beta, Fraction(0))
    ok = best_beta >= 0 and _box_slack(hull, box, best_z, beta)
    return InscribedBox(best_z, beta, lp_x0, lp_beta, ok)


# -- boundary shell ---------------------------------------------------------


def _integer_system(hull: LatticeHull, x0, gamma: Fraction):
    """Facets of C' = (1-g)C + g x0 scaled to integers: (normals, rhs, denominator)."""
    x0 = [Fraction(v) for v in x0]
    den = gamma.denominator * math.lcm(*(v.denominator for v in x0))
    N = [list(n) for n, _ in hull.facets]
    rhs_c = [c * den for _, c in hull.facets]
    rhs_s = [int(((1 - gamma) * c + gamma * sum(a * b for a, b in zip(n, x0))) * den)
             for n, c in hull.facets]
    eq_n = [list(n) for n, _ in hull.equalities]
    eq_c = [c * den for _, c in hull.equalities]
    eq_s = [int(((1 - gamma) * c + gamma * sum(a * b for a, b in zip(n, x0))) * den)
            for n, c in hull.equalities]
    return N, rhs_c, rhs_s, eq_n, eq_c, eq_s, den


def boundary_shell_count(hull: LatticeHull, x0, gamma, *, budget: int = ENUMERATION_BUDGET) -> int:
    """Lattice points of C not in C' = (1 - gamma) C + gamma x0."""
    gamma = to_fraction(gamma)
    if not 0 < gamma < 1:
        raise DomainError("need 0 < gamma < 1")
    if not hull.contains(x0):
        raise DomainError("x0 must lie in the hull")
    lo, hi = hull.bounding_box
    sides = [h - l + 1 for l, h in zip(lo, hi)]
    total = math.prod(sides)
    if total > budget:
        raise ResourceError(f"bounding box holds {total} lattice points", estimated_cost=total)
    N, rhs_c, rhs_s, eq_n, eq_c, eq_s, den = _integer_system(hull, x0, gamma)
    mags = [abs(v) for row in N + eq_n for v in row] + [abs(v) for v in rhs_c + rhs_s + eq_c + eq_s]
    coord = max(max(abs(v) for v in lo), max(abs(v) for v in hi), 1)
    dtype = np.int64 if max(mags + [1]) * coord * den * 4 < 2**62 else object

    rest = [np.arange(l, h + 1, dtype=np.int64) for l, h in zip(lo[1:], hi[1:])]
    if rest:
        mesh = np.stack([g.ravel() for g in np.meshgrid(*rest, indexing="ij")], axis=1).astype(dtype)
    else:
        mesh = np.zeros((1, 0), dtype=dtype)
    count = 0
    for x in range(lo[0], hi[0] + 1):
        Y = np.concatenate([np.full((len(mesh), 1), x, dtype=dtype), mesh], axis=1)
        in_c = np.ones(len(Y), dtype=bool)
        in_s = np.ones(len(Y), dtype=bool)
        for n, c, s in zip(N, rhs_c, rhs_s):
            v = Y @ np.asarray(n, dtype=dtype) * den
            in_c &= v <= c
            in_s &= v <= s
        for n, c, s in zip(eq_n, eq_c, eq_s):
            v = Y @ np.asarray(n, dtype=dtype) * den
            in_c &= v == c
            in_s &= v == s
        count += int(np.count_nonzero(in_c & ~in_s))
    return count


# -- regularization ---------------------------------------------------------


@dataclass(frozen=True)
class RegularizedSet:
    kept: tuple[Vec, ...]
    epsilon: Fraction
    removed_count: int
    threshold: Fraction  # eps * |P_eps|
    tiles: int
    extra_passes: int

    def to_dict(self) -> dict:
        return {"kept": [list(p) for p in self.kept], "epsilon": self.epsilon,
                "removed_count": self.removed_count, "threshold": self.threshold,
                "tiles": self.tiles, "extra_passes": self.extra_passes}


def neighbourhood_counts(A: Sequence[Vec], box: LatticeBox, eps) -> dict[Vec, int]:
    """|(a + P_eps) intersect A| for each a in A."""
    radii = box.scaled_radii(eps)
    if not A:
        return {}
    arr = np.asarray(A, dtype=np.int64)
    out = {}
    for i, a in enumerate(arr):
        inside = np.all(np.abs(arr - a) <= np.asarray(radii), axis=1)
        out[tuple(int(t) for t in a)] = int(np.count_nonzero(inside))
    return out


def is_epsilon_regular(A: Sequence[Vec], box: LatticeBox, eps) -> bool:
    need = to_fraction(eps) * box.scaled_count(eps)
    return all(c >= need for c in neighbourhood_counts(A, box, eps).values())


def epsilon_regularize(A, box: LatticeBox, eps) -> RegularizedSet:
    """Drop the points of A lying in sparse tiles of a P_(eps/2) tiling of the box.

    A tile is sparse when it holds at most eps|P_eps| points of A. If some
    survivor still fails the per-point regularity test, failing points are
    removed again until none do; such rounds are counted in ``extra_passes``.
    """
    eps = to_fraction(eps)
    if not 0 < eps < 1:
        raise DomainError("need 0 < eps < 1")
    pts = _box_points(A, box)
    if any(not box.contains(p) for p in pts):
        raise DomainError("A must lie in the box")
    threshold = eps * box.scaled_count(eps)
    sides = [2 * math.floor(eps * n / 2) + 1 for n in box.half_widths]
    tiles: dict[tuple, list[Vec]] = {}
    for p in pts:
        key = tuple((t + n) // s for t, n, s in zip(p, box.half_widths, sides))
        tiles.setdefault(key, []).append(p)
    kept = sorted(p for group in tiles.values() if len(group) > threshold for p in group)
    n_tiles = math.prod(-(-(2 * n + 1) // s) for n, s in zip(box.half_widths, sides))

    extra = 0
    while kept:
        counts = neighbourhood_counts(kept, box, eps)
        bad = {p for p, c in counts.items() if c < threshold}
        if not bad:
            break
        kept = [p for p in kept if p not in bad]
        extra += 1
    return RegularizedSet(tuple(kept), eps, len(pts) - len(kept), threshold, n_tiles, extra)


# -- Shapley-Folkman --------------------------------------------------------


@dataclass(frozen=True)
class SFDecomposition:
    residual: tuple[Fraction, ...]
    parts: tuple[Vec, ...]
    weights: dict = field(default_factory=dict)
    method: str = "basic-solution"
    certified: bool = True

    def to_dict(self) -> dict:
        return {"residual": list(self.residual), "parts": [list(p) for p in self.parts],
                "method": self.method, "certified": self.certified}


def _rational_point(x, d: int) -> tuple[Fraction, ...]:
    if isinstance(x, (int, float, str, Fraction)):
        x = (x,)
    x = tuple(to_fraction(v) for v in x)
    if len(x) != d:
        raise ValidationError(f"point {x} has dimension {len(x)}, expected {d}")
    return x


def shapley_folkman_decompose(B, k: int, x) -> SFDecomposition:
    """Write x in k*conv(B) as w + b_1 + ... + b_(k-d) with w in d*conv(B), b_i in B."""
    pts, d = _as_points(B)
    k = int(k)
    if k <= d:
        raise DomainError(f"need k > d = {d}")
    x = _rational_point(x, d)
    hull = convex_hull(pts)
    if not hull.contains(x, scale=k):
        raise DomainError("x is not in k*conv(B)")

    def finish(parts, method):
        w = tuple(xi - sum(p[i] for p in parts) for i, xi in enumerate(x))
        if not hull.contains(w, scale=d):
            return None
        return SFDecomposition(w, tuple(sorted(parts)), {}, method, True)

    if all((v / k).denominator == 1 for v in x):
        b = tuple(int(v / k) for v in x)
        if b in set(pts):
            out = finish([b] * (k - d), "constant")
            if out is not None:
                return out

    A_eq = [[1] * len(pts)] + [[p[i] for p in pts] for i in range(d)]
    b_eq = [k] + list(x)
    lam = basic_feasible_solution(A_eq, b_eq)
    if lam is not None:
        parts: list[Vec] = []
        for p, wgt in zip(pts, lam):
            parts.extend([p] * math.floor(wgt))
        if len(parts) >= k - d:
            out = finish(parts[: k - d], "basic-solution")
            if out is not None:
                return SFDecomposition(out.residual, out.parts,
                                       {p: w for p, w in zip(pts, lam) if w}, out.method)

    n_multisets = math.comb(len(pts) + k - d - 1, k - d)
    if n_multisets > SF_FALLBACK_BUDGET:
        raise ResourceError("exhaustive Shapley-Folkman search too large", estimated_cost=n_multisets)
    for combo in combinations_with_replacement(pts, k - d):
        out = finish(list(combo), "exhaustive")
        if out is not None:
            return out
    raise ResourceError("no decomposition found", estimated_cost=n_multisets)


# -- popular Shapley-Folkman ------------------------------------------------


@dataclass(frozen=True)
class PopularSF:
    count: int
    delta_measured: Fraction
    reference_delta: Fraction  # eps^(d+1) N_1...N_d / |P|
    regular_threshold: Fraction  # eps |P_eps|
    hypotheses: dict

    @property
    def hypotheses_hold(self) -> bool:
        return all(self.hypotheses.values())

    def to_dict(self) -> dict:
        return {"count": self.count, "delta_measured": self.delta_measured,
                "delta_measured_float": float(self.delta_measured),
                "reference_delta": self.reference_delta, "regular_threshold": self.regular_threshold,
                "hypotheses": dict(self.hypotheses), "hypotheses_hold": self.hypotheses_hold}


def popular_sf_density(A, box: LatticeBox, gamma, eps, k: int, x, *, x0=None, beta=None) -> PopularSF:
    """Count a in A with x - a in k C', C' = (1 - gamma) C + gamma x0, C = conv(A).

    (x0, beta) default to ``inscribe_box``. Each hypothesis is checked and
    reported under ``hypotheses``; the count is computed regardless.
    """
    gamma, eps = to_fraction(gamma), to_fraction(eps)
    pts = _box_points(A, box)
    if not pts:
        raise DomainError("A is empty")
    d = box.d
    k = int(k)
    x = _rational_point(x, d)
    hull = convex_hull(pts)
    hyp = {}
    if x0 is None or beta is None:
        if hull.full_dimensional:
            ib = inscribe_box(pts, box)
            x0, beta = ib.x0, ib.beta
        else:
            x0, beta = pts[0], Fraction(0)
    beta = to_fraction(beta)
    hyp["box_inscribed"] = beta > 0 and hull.full_dimensional and _box_slack(hull, box, x0, beta)
    hyp["gamma_range"] = 0 < gamma < Fraction(1, d + 2)
    hyp["eps_le_beta_gamma"] = 0 < eps <= beta * gamma
    hyp["k_gt_d"] = k > d
    hyp["epsilon_regular"] = is_epsilon_regular(pts, box, eps)
    hyp["x_in_(k+1)C'"] = hull.contains(x, scale=k + 1, center=x0, shrink=gamma)

    count = sum(
        1 for a in pts
        if hull.contains([xi - ai for xi, ai in zip(x, a)], scale=k, center=x0, shrink=gamma)
    )
    ref = eps ** (d + 1) * math.prod(box.half_widths) / box.count
    return PopularSF(count, Fraction(count, box.count), ref,
                     eps * box.scaled_count(eps), hyp)
