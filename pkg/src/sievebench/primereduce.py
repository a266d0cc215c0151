"""Localizing a prime set onto a fine logarithmic grid, and prime-tuple counts."""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import mpmath
import numpy as np

from ._exact import (ReciprocalSum, compare_real, harmonic_sum,
                     mpf_to_fraction, reciprocal_sum, to_fraction)
from .errors import CounterexampleError, DomainError, ResourceError
from .primeset import PrimeSet, floor_root, v_bound
from .sumsolve import WeightedIntegerSet

GRID_PREC = 128
TUPLE_BUDGET = 10**7


def _mp(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


@dataclass(frozen=True)
class RhoGrid:
    """Cells [rho^a, rho^(a+1)) with rho = 1 + (lam/(1000 v))^2 and N = log_rho x - v."""

    rho: Fraction
    N: Fraction  # log_rho(x) - v to GRID_PREC bits
    lam: Fraction
    u: Fraction
    v: Fraction
    x: object

    @property
    def log_rho(self):
        with mpmath.workprec(GRID_PREC):
            return mpmath.log1p(_mp(self.rho - 1))

    @property
    def a_range(self) -> tuple[int, int]:
        """Integer cells a with N/v < a <= N/u."""
        lo = math.floor(self.N / self.v) + 1
        hi = math.floor(self.N / self.u)
        return lo, hi

    def cell_of(self, primes: np.ndarray) -> np.ndarray:
        """floor(log p / log rho) for each p, exact (rho^a never equals a prime)."""
        p = np.asarray(primes, dtype=np.float64)
        if len(p) == 0:
            return np.zeros(0, dtype=np.int64)
        lr = self.log_rho
        est = np.log(p) / float(lr)
        cells = np.floor(est).astype(np.int64)
        frac = est - cells
        shaky = np.flatnonzero((frac < 1e-6) | (frac > 1 - 1e-6))
        with mpmath.workprec(GRID_PREC):
            for i in shaky.tolist():
                cells[i] = int(mpmath.floor(mpmath.log(int(primes[i])) / lr))
        return cells

    def to_dict(self) -> dict:
        return {"rho": self.rho, "N": float(self.N), "lambda": self.lam,
                "u": self.u, "v": self.v, "x": str(self.x)}


def build_rho_grid(x, u, v, lam) -> RhoGrid:
    """Exact rho, and N evaluated with mpmath at 128 bits.

    ``x`` may be an integer or anything mpmath accepts as a real (e.g. mpmath.e).
    """
    u, v, lam = to_fraction(u), to_fraction(v), to_fraction(lam)
    if not 1 <= u <= v:
        raise DomainError("need 1 <= u <= v")
    if not 0 < lam <= 1:
        raise DomainError("need 0 < lam <= 1")
    rho = 1 + (lam / (1000 * v)) ** 2
    with mpmath.workprec(GRID_PREC):
        xv = mpmath.mpf(x)
        if xv <= 1:
            raise DomainError("need x > 1")
        N = mpmath.log(xv) / mpmath.log1p(_mp(rho - 1)) - _mp(v)
    N = mpf_to_fraction(N)
    if N <= 0:
        raise DomainError("N = log_rho x - v is not positive")
    return RhoGrid(rho, N, lam, u, v, x)


class _LazyWeights(Mapping):
    """Exact per-cell weights of A, computed on first access."""

    def __init__(self, cells, pos):
        self._cells, self._pos = cells, pos
        self._map = None

    def _load(self):
        if self._map is None:
            self._map = {int(self._cells.index[i]): self._cells.exact_weight(int(i)) for i in self._pos}
        return self._map

    def __getitem__(self, a):
        return self._load()[a]

    def __iter__(self):
        return iter(self._load())

    def __len__(self):
        return len(self._pos)


@dataclass(frozen=True)
class LocalizedSet:
    j0: int
    J0: float
    A: WeightedIntegerSet
    cell_weights: "Mapping[int, Fraction]"
    cell_weight_sum: ReciprocalSum
    premise_holds: bool
    window_sum: float
    A_reciprocal_sum: float
    consequence_holds: bool  # sum_{a in A} 1/a >= (1 + lam/4)/u
    log_comparison_holds: bool  # sum 1/a >= (1 - lam/100) * cell weight of A
    tested: list = field(default_factory=list)  # (j, |A_j|, S_j float, threshold float, holds)
    verified: bool = False

    def to_dict(self) -> dict:
        return {
            "j0": self.j0,
            "J0": self.J0,
            "cells": len(self.A),
            "verified": self.verified,
            "premise_holds": self.premise_holds,
            "window_sum": self.window_sum,
            "cell_weight_sum": self.cell_weight_sum.value,
            "A_reciprocal_sum": self.A_reciprocal_sum,
            "consequence_holds": self.consequence_holds,
            "log_comparison_holds": self.log_comparison_holds,
            "tested": [list(t) for t in self.tested],
        }


def J0_of(v: Fraction, lam: Fraction):
    return mpmath.log(20 * _mp(v) * mpmath.log(_mp(v)) / _mp(lam))


def _certified_ge(s: ReciprocalSum, fn) -> bool:
    """s >= fn() where fn is a transcendental real (equality is not expected)."""
    if compare_real(s.lower, fn) > 0:
        return True
    if compare_real(s.upper, fn) < 0:
        return False
    return compare_real(s.exact_value(), fn) >= 0


def _window_primes(pset: PrimeSet, x: int, u: Fraction, v: Fraction) -> np.ndarray:
    lo = floor_root(x, float(v))
    hi = floor_root(x, float(u))
    return pset.between(lo, hi)


@dataclass(frozen=True)
class _Cells:
    index: np.ndarray  # distinct occupied cells a, ascending
    starts: np.ndarray  # offsets into primes
    primes: np.ndarray
    weight: np.ndarray  # float sum of 1/p per cell

    def primes_of(self, i: int) -> list[int]:
        end = self.starts[i + 1] if i + 1 < len(self.starts) else len(self.primes)
        return self.primes[self.starts[i] : end].tolist()

    def exact_weight(self, i: int) -> Fraction:
        return harmonic_sum(self.primes_of(i))


def _occupied_cells(grid: RhoGrid, members: np.ndarray) -> _Cells:
    lo, hi = grid.a_range
    cells = grid.cell_of(members)
    keep = (cells >= lo) & (cells <= hi)
    cells, primes = cells[keep], members[keep]
    index, starts = np.unique(cells, return_index=True)
    weight = (np.add.reduceat(1.0 / primes.astype(np.float64), starts)
              if len(primes) else np.zeros(0))
    return _Cells(index, starts, primes, weight)


def _qualifying(cells: _Cells, j: int) -> np.ndarray:
    """Positions i with a_i * w_i >= e^{-j}; near-ties settled exactly."""
    ratio = cells.index.astype(np.float64) * cells.weight
    e = math.exp(-j)
    sure = ratio > e * (1 + 1e-9)
    tie = np.flatnonzero(~sure & (ratio >= e * (1 - 1e-9)))
    for i in tie.tolist():
        q = int(cells.index[i]) * cells.exact_weight(i)
        sure[i] = compare_real(q, lambda: mpmath.exp(-j)) >= 0
    return np.flatnonzero(sure)


def _cell_primes(cells: _Cells, pos: np.ndarray) -> list[int]:
    if len(pos) == 0:
        return []
    mask = np.zeros(len(cells.index), dtype=bool)
    mask[pos] = True
    return cells.primes[np.repeat(mask, np.diff(np.append(cells.starts, len(cells.primes))))].tolist()


def _bracket_ge(s: ReciprocalSum, t: ReciprocalSum, c: Fraction) -> bool:
    """s >= c * t for two certified sums."""
    if s.lower >= c * t.upper:
        return True
    if s.upper < c * t.lower:
        return False
    return s.exact_value() >= c * t.exact_value()


def localize(pset: PrimeSet, grid: RhoGrid, *, verify: bool = True) -> LocalizedSet:
    """Smallest j >= 0 whose qualifying cells A_j carry enough prime mass.

    A_j = {a in (N/v, N/u] : sum over member primes in [rho^a, rho^(a+1)) of
    1/p >= e^{-j}/a}; j qualifies when that mass, summed over A_j, reaches
    (1 + lam/3 + (lam/3) j/J0)/u. All comparisons are certified.
    """
    x = grid.x
    if not isinstance(x, (int, np.integer)) or x < 10**4:
        raise DomainError("localize needs an integer x >= 10^4")
    x = int(x)
    if x > pset.limit:
        raise DomainError(f"grid x={x} exceeds the set's limit {pset.limit}")
    u, v, lam = grid.u, grid.v, grid.lam
    with mpmath.workprec(GRID_PREC):
        J0 = J0_of(v, lam)
    if J0 <= 0:
        raise DomainError("J0 = log(20 v log v / lam) must be positive")
    J0f = float(J0)

    window = _window_primes(pset, x, u, v)
    window_sum = reciprocal_sum(window.tolist())
    premise = window_sum.at_least((1 + lam) / u)

    cells = _occupied_cells(grid, pset.members[pset.members <= x])

    tested = []
    for j in range(0, math.floor(J0f) + 1):
        pos = _qualifying(cells, j)
        A_j = cells.index[pos].tolist()
        S = reciprocal_sum(_cell_primes(cells, pos))
        jj = j

        def threshold():
            J = J0_of(v, lam)
            return (1 + _mp(lam) / 3 + _mp(lam) / 3 * jj / J) / _mp(u)

        ok = _certified_ge(S, threshold)
        with mpmath.workprec(64):
            tested.append((j, len(A_j), S.value, float(threshold()), ok))
        if ok:
            A = WeightedIntegerSet(tuple(A_j), max(math.floor(grid.N), 1))
            inv = reciprocal_sum(A_j)
            cons = inv.at_least((1 + lam / 4) / u)
            log_cmp = _bracket_ge(inv, S, 1 - lam / 100)
            out = LocalizedSet(j, J0f, A, _LazyWeights(cells, pos), S, premise,
                               window_sum.value, inv.value, cons, log_cmp, tested)
            if verify:
                object.__setattr__(out, "verified", verify_localization(pset, grid, out))
            return out
    raise CounterexampleError(
        f"no j <= J0 = {J0f:.4f} satisfies the localization inequality",
        premise_holds=premise,
    )


def verify_localization(pset: PrimeSet, grid: RhoGrid, result: LocalizedSet) -> bool:
    """Recompute A_j and the mass test for every j <= j0 independently of ``localize``."""
    x = int(grid.x)
    cells_all = _occupied_cells(grid, pset.members[pset.members <= x])
    for j in range(0, result.j0 + 1):
        pos = _qualifying(cells_all, j)
        cells = cells_all.index[pos].tolist()
        S = reciprocal_sum(_cell_primes(cells_all, pos))
        ok = _certified_ge(S, lambda: (1 + _mp(grid.lam) / 3 + _mp(grid.lam) / 3 * j / J0_of(grid.v, grid.lam)) / _mp(grid.u))
        if j < result.j0 and ok:
            return False
        if j == result.j0 and (not ok or sorted(cells) != list(result.A.members)):
            return False
    return True


def cell_tuple_consistent(grid: RhoGrid, primes) -> bool | None:
    """For a prime tuple whose cells sum into (N-k, N], is the product in [x/2, x]?

    Returns None when the cell sum misses the window (nothing to check).
    """
    primes = [int(p) for p in primes]
    k = len(primes)
    cells = grid.cell_of(np.asarray(primes, dtype=np.int64)).tolist()
    s = sum(cells)
    if not grid.N - k < s <= grid.N:
        return None
    prod = math.prod(primes)
    x = int(grid.x)
    return 2 * prod >= x and prod <= x


# -- Hypothesis P -----------------------------------------------------------


def _layer_products(primes: np.ndarray, depth: int, cap: int, budget: int) -> np.ndarray:
    big = cap >= 2**62
    dtype = object if big else np.int64
    cur = np.ones(1, dtype=dtype)
    P = primes.astype(dtype)
    for _ in range(depth):
        if len(cur) * len(P) > budget:
            raise ResourceError(
                f"half-product list would reach {len(cur) * len(P)} entries",
                estimated_cost=len(cur) * len(P),
            )
        nxt = np.outer(cur, P).ravel() if not big else np.array(
            [c * p for c in cur.tolist() for p in P.tolist()], dtype=object)
        cur = nxt[nxt <= cap]
    cur.sort()
    return cur


def hyp_p_tuple_count(pset: PrimeSet, x: int, k: int, *, budget: int = TUPLE_BUDGET) -> int:
    """Ordered k-tuples of members with x/2 <= p_1 ... p_k <= x (meet in the middle)."""
    x, k = int(x), int(k)
    if k < 1:
        raise DomainError("k must be positive")
    if x < 1:
        raise DomainError("x must be positive")
    P = pset.members[pset.members <= min(x, pset.limit)]
    if len(P) == 0:
        return 0
    pmin = int(P[0])
    if pmin ** k > x:
        return 0
    P = P[P <= min(x // pmin ** (k - 1), int(P[-1]))]
    k1 = (k + 1) // 2
    k2 = k - k1
    est = len(P) ** k1
    if est > budget:
        raise ResourceError(f"|P|^ceil(k/2) = {est} exceeds the budget {budget}", estimated_cost=est)
    left = _layer_products(P, k1, x // pmin ** k2, budget)
    right = _layer_products(P, k2, x // pmin ** k1, budget)
    if x >= 2**62 or left.dtype == object or right.dtype == object:
        total = 0
        rl = right.tolist()
        for l in left.tolist():
            lo = -(-x // (2 * l))
            hi = x // l
            total += bisect_right(rl, hi) - bisect_left(rl, lo)
        return total
    lo = -(-x // (2 * left))
    hi = x // left
    counts = np.searchsorted(right, hi, side="right") - np.searchsorted(right, lo, side="left")
    return int(np.sum(counts))


@dataclass(frozen=True)
class PiRow:
    k: int
    count: int
    pi: float

    def to_dict(self) -> dict:
        return {"k": self.k, "count": self.count, "pi": self.pi}


@dataclass(frozen=True)
class HypothesisPReport:
    x: int
    k_range: tuple[int, int]
    rows: tuple[PiRow, ...]
    best_k: int
    best_pi: float
    refinement_k_bound: float
    refinement_holds: bool
    premises: dict

    def to_dict(self) -> dict:
        return {"x": self.x, "k_range": list(self.k_range),
                "table": [r.to_dict() for r in self.rows], "best_k": self.best_k,
                "best_pi": self.best_pi, "refinement_k_bound": self.refinement_k_bound,
                "refinement_holds": self.refinement_holds, "premises": dict(self.premises)}


def hyp_p_check(pset: PrimeSet, x: int, u, v, lam, *, denominator=999,
                budget: int = TUPLE_BUDGET) -> HypothesisPReport:
    """pi(k) = count_k * v^k * log x / x for k in [u, v]; premise violations are reported."""
    x = int(x)
    u, v, lam = to_fraction(u), to_fraction(v), to_fraction(lam)
    if not 0 < lam < 1:
        raise DomainError("need 0 < lam < 1")
    k_lo, k_hi = max(math.ceil(u), 1), math.floor(v)
    if u > v or k_lo > k_hi:
        raise DomainError(f"empty k-range [{u}, {v}]")
    lx = math.log(x)
    rows = []
    for k in range(k_lo, k_hi + 1):
        c = hyp_p_tuple_count(pset, x, k, budget=budget)
        rows.append(PiRow(k, c, c * float(v) ** k * lx / x))
    best = max(rows, key=lambda r: (r.pi, -r.k))
    cap = float(v) * math.exp(-1 / float(u))
    refine = any(r.count > 0 and r.k <= cap for r in rows)

    members = pset.members[pset.members <= min(x, pset.limit)]
    lo, hi = floor_root(x, float(v)), floor_root(x, float(u))
    inside = members[(members > lo) & (members <= hi)]
    premises = {
        "members_in_window": len(inside) == len(members),
        "reciprocal_sum_condition": reciprocal_sum(inside.tolist()).at_least((1 + lam) / u),
        "v_bound": (x > 15 and float(v) <= v_bound(x, denominator)),
    }
    return HypothesisPReport(x, (k_lo, k_hi), tuple(rows), best.k, best.pi, cap, refine, premises)
