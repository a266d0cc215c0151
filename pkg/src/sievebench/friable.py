"""Exact counts of integers with all prime factors in a set, and Dickman's rho."""

from __future__ import annotations

import math
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResourceError
from .primeset import PrimeSet, mertens_product

SPARSE_CEILING = 10**9
DENSE_CEILING = 10**8
TABLE_CEILING = 10**7

RHO_STEP = 1e-4
RHO_MAX = 50


def estimate_cost(x: int, primes) -> float:
    """Rough DFS size: sum over usable primes of log x / log p."""
    if x < 2 or len(primes) == 0:
        return 1.0
    p = np.asarray(primes, dtype=np.float64)
    return float(np.sum(math.log(x) / np.log(p)))


def _is_dense(x: int, n_primes: int) -> bool:
    if x < 3:
        return True
    return n_primes > 0.5 * x / math.log(x)


def _usable_primes(x: int, pset: PrimeSet, ceiling: int | None) -> list[int]:
    primes = pset.members[pset.members <= x].tolist()
    if ceiling is None:
        ceiling = DENSE_CEILING if _is_dense(x, len(primes)) else SPARSE_CEILING
    if x > ceiling:
        raise ResourceError(
            f"x={x} exceeds the psi_count ceiling {ceiling}",
            estimated_cost=estimate_cost(x, primes),
        )
    return primes


def _count_from(x: int, primes: list[int], roots) -> int:
    """Count friable n <= x in the subtrees rooted at each (n, i) of ``roots``.

    A node (n, i) stands for n itself plus every n*p*... extension using
    primes of index >= i. Children p with n*p*p > x have no descendants and
    are counted in bulk by bisection.
    """
    total = 0
    stack = list(roots)
    pop, push = stack.pop, stack.append
    while stack:
        n, i = pop()
        total += 1
        q = x // n
        hi = bisect_right(primes, q)
        if hi <= i:
            continue
        mid = bisect_right(primes, math.isqrt(q), i, hi)
        total += hi - mid
        for j in range(i, mid):
            push((n * primes[j], j))
    return total


def _count_chunk(args) -> int:
    x, primes, js = args
    return _count_from(x, primes, [(primes[j], j) for j in js])


def psi_count(x: int, pset: PrimeSet, *, ceiling: int | None = None, n_jobs: int = 1) -> int:
    """Number of n <= x all of whose prime factors lie in ``pset`` (n = 1 included).

    Enumerates nondecreasing prime sequences depth first. ``ceiling``
    overrides the default size guard (1e8 for dense sets, 1e9 otherwise).
    With ``n_jobs > 1`` the subtrees under each smallest prime factor are
    spread over worker processes.
    """
    x = int(x)
    if x < 1:
        raise DomainError(f"x must be a positive integer, got {x}")
    primes = _usable_primes(x, pset, ceiling)
    if n_jobs <= 1 or not primes:
        return _count_from(x, primes, [(1, 0)])

    hi = len(primes)
    mid = bisect_right(primes, math.isqrt(x))
    total = 1 + (hi - mid)
    chunks = [list(range(k, mid, n_jobs)) for k in range(n_jobs)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        total += sum(pool.map(_count_chunk, [(x, primes, js) for js in chunks if js]))
    return total


def friable_numbers(x: int, pset: PrimeSet) -> np.ndarray:
    """Sorted array of every n <= x whose prime factors all lie in ``pset``."""
    x = int(x)
    if x > TABLE_CEILING:
        raise ResourceError(f"x={x} exceeds the table ceiling {TABLE_CEILING}", estimated_cost=x)
    nums = np.ones(1, dtype=np.int64)
    for p in pset.members[pset.members <= x].tolist():
        layers = [nums]
        cur = nums
        while True:
            cur = cur[cur <= x // p] * p
            if len(cur) == 0:
                break
            layers.append(cur)
        nums = np.concatenate(layers)
    nums.sort()
    return nums


def psi_table(x: int, pset: PrimeSet) -> np.ndarray:
    """``t[n] = Psi(n; pset)`` for every 0 <= n <= x (``t[0] = 0``)."""
    hits = np.zeros(int(x) + 1, dtype=np.int64)
    hits[friable_numbers(x, pset)] = 1
    return np.cumsum(hits)


@lru_cache(maxsize=1)
def _rho_grid() -> np.ndarray:
    """rho on a uniform grid over [0, RHO_MAX].

    Uses u rho(u) = int_{u-1}^{u} rho. On [k, k+1] put
    G(u) = int_{u-1}^{k} rho (known from the previous piece); then
    rho(u) = G(u)/u + int_k^u G(t)/t^2 dt. Every term is positive, so
    relative error does not blow up the way the subtractive form
    rho(u) = rho(k) - int rho(t-1)/t does. Both integrals use the
    trapezoid rule with the Euler-Maclaurin end correction.
    """
    per_unit = int(round(1 / RHO_STEP))
    h = np.longdouble(1) / per_unit
    c = h * h / 12
    grid = np.empty(RHO_MAX * per_unit + 1, dtype=np.longdouble)
    grid[: per_unit + 1] = 1
    offsets = np.arange(per_unit + 1, dtype=np.longdouble) * h
    prev_slope = np.zeros(per_unit + 1, dtype=np.longdouble)  # rho' on [k-1, k]
    for k in range(1, RHO_MAX):
        prev = grid[(k - 1) * per_unit : k * per_unit + 1]
        t = k + offsets
        # G_m = int_{k-1+mh}^{k} rho: suffix sums of the previous piece
        cells = (prev[1:] + prev[:-1]) * (h / 2)
        suffix = np.concatenate([np.cumsum(cells[::-1])[::-1], [0]])
        G = suffix - c * (prev_slope[-1] - prev_slope)
        g = G / t**2
        dg = -prev / t**2 - 2 * G / t**3
        H = np.concatenate([[0], np.cumsum((g[1:] + g[:-1]) * (h / 2))]) - c * (dg - dg[0])
        piece = G / t + H
        grid[k * per_unit + 1 : (k + 1) * per_unit + 1] = piece[1:]
        prev_slope = -prev / t
    grid.setflags(write=False)
    return grid


def dickman_rho(u: float) -> float:
    """Dickman's function: 1 on [0, 1], then u rho'(u) = -rho(u - 1).

    Values come from a 1e-4 grid (see ``_rho_grid``), linearly interpolated
    between nodes.
    """
    u = float(u)
    if not 0 <= u <= RHO_MAX:
        raise DomainError(f"dickman_rho is defined here for 0 <= u <= {RHO_MAX}, got {u}")
    if u <= 1:
        return 1.0
    grid = _rho_grid()
    pos = np.longdouble(u) * int(round(1 / RHO_STEP))
    i = min(int(pos), len(grid) - 2)
    t = pos - i
    return float(grid[i] * (1 - t) + grid[i + 1] * t)


@dataclass(frozen=True)
class PsiReport:
    x: int
    psi: int
    ratio: float
    mertens: float
    quotient: float

    def to_dict(self) -> dict:
        return {"x": self.x, "psi": self.psi, "ratio": self.ratio,
                "mertens": self.mertens, "quotient": self.quotient}


def theorem_ratio_report(x: int, pset: PrimeSet, **kwargs) -> PsiReport:
    """Psi(x)/x against the product of (1 - 1/p) over primes <= x outside the set."""
    psi = psi_count(x, pset, **kwargs)
    ratio = psi / x
    mertens = mertens_product(pset, upto=x)
    return PsiReport(int(x), psi, ratio, mertens, ratio / mertens)
