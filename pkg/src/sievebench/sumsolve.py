"""Subset-sum witnesses, exact k-fold representation counts and related checkers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import mpmath
import numpy as np

from ._exact import compare_real, fraction_to_float, harmonic_sum, sqrt_bracket, to_fraction
from .errors import CounterexampleError, DomainError, ResourceError, ValidationError

MAX_ARITY = 200
MAX_CEILING = 10**6
PACKED_BIT_BUDGET = 2**32


def _positive_int(value, what: str) -> int:
    if isinstance(value, np.integer):
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    if value < 1:
        raise ValidationError(f"{what} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class WeightedIntegerSet:
    """A finite set of positive integers inside [1, N]."""

    members: tuple[int, ...]
    N: int

    def __post_init__(self):
        object.__setattr__(self, "N", _positive_int(self.N, "N"))
        vals = [_positive_int(a, "member") for a in self.members]
        vals = sorted(set(vals))
        if vals and vals[-1] > self.N:
            raise ValidationError(f"member {vals[-1]} exceeds N={self.N}")
        object.__setattr__(self, "members", tuple(vals))

    @classmethod
    def interval(cls, N: int, lo: int, hi: int, keep="all") -> "WeightedIntegerSet":
        """Integers in [lo, hi], optionally only those in given residue classes."""
        lo, hi = max(int(lo), 1), int(hi)
        if keep == "all":
            return cls(tuple(range(lo, hi + 1)), N)
        if not isinstance(keep, dict) or set(keep) != {"modulus", "residues"}:
            raise ValidationError("'keep' must be \"all\" or {\"modulus\": m, \"residues\": [...]}")
        m = _positive_int(keep["modulus"], "modulus")
        res = {int(r) % m for r in keep["residues"]}
        return cls(tuple(a for a in range(lo, hi + 1) if a % m in res), N)

    @classmethod
    def from_dict(cls, doc: dict) -> "WeightedIntegerSet":
        if not isinstance(doc, dict):
            raise ValidationError("integer set document must be a JSON object")
        if "N" not in doc:
            raise ValidationError("integer set document needs 'N'")
        if "members" in doc:
            extra = set(doc) - {"N", "members"}
            if extra:
                raise ValidationError(f"unknown integer set fields: {sorted(extra)}")
            if not isinstance(doc["members"], list):
                raise ValidationError("'members' must be a JSON array")
            return cls(tuple(doc["members"]), doc["N"])
        if "interval" in doc:
            extra = set(doc) - {"N", "interval", "keep"}
            if extra:
                raise ValidationError(f"unknown integer set fields: {sorted(extra)}")
            iv = doc["interval"]
            if not isinstance(iv, list) or len(iv) != 2:
                raise ValidationError("'interval' must be a two-element list")
            lo, hi = (_positive_int(t, "interval bound") for t in iv)
            return cls.interval(doc["N"], lo, hi, doc.get("keep", "all"))
        raise ValidationError("integer set document needs 'members' or 'interval'")

    def to_dict(self) -> dict:
        return {"N": self.N, "members": list(self.members)}

    @cached_property
    def reciprocal_sum(self) -> Fraction:
        return harmonic_sum(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, a) -> bool:
        return a in self._lookup

    @cached_property
    def _lookup(self) -> frozenset:
        return frozenset(self.members)


# -- Bleichenbacher ---------------------------------------------------------


@dataclass(frozen=True)
class PreconditionCheck:
    holds: bool
    margin: float
    reciprocal_sum: Fraction
    threshold_low: Fraction
    threshold_high: Fraction


@dataclass(frozen=True)
class BleichenbacherWitness:
    k: int
    parts: tuple[int, ...]
    total: int
    method: str = "dp"

    def to_dict(self) -> dict:
        return {"k": self.k, "parts": list(self.parts), "total": self.total, "method": self.method}


def _threshold_bracket(N: int, u: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    lo, hi = sqrt_bracket(N, bits)
    return 1 / u + 1 / (hi - 1), 1 / u + 1 / (lo - 1)


def check_bleichenbacher_precondition(A: WeightedIntegerSet, u) -> PreconditionCheck:
    """Is sum 1/a > 1/u + 1/(sqrt(N) - 1)?  Decided exactly with a bracketed root."""
    u = to_fraction(u)
    N = A.N
    if N <= 1:
        raise DomainError("need N > 1")
    if u <= 0:
        raise DomainError("u must be positive")
    cap = math.floor(N / u)
    if A.members and A.members[-1] > cap:
        raise DomainError(f"member {A.members[-1]} exceeds floor(N/u) = {cap}")
    s = A.reciprocal_sum
    bits = 48
    while True:
        t_lo, t_hi = _threshold_bracket(N, u, bits)
        if s > t_hi or s <= t_lo or t_lo == t_hi or bits > 4096:
            break
        bits *= 4
    holds = s > t_hi if t_lo != t_hi else s > t_lo
    mid = (t_lo + t_hi) / 2
    return PreconditionCheck(holds, float(s - mid), s, t_lo, t_hi)


def _lex_smallest(A: Sequence[int], reach: list[int], k: int, total: int) -> tuple[int, ...]:
    parts = []
    for j in range(k, 0, -1):
        for a in A:
            rest = total - a
            if rest >= 0 and (reach[j - 1] >> rest) & 1:
                parts.append(a)
                total = rest
                break
        else:  # pragma: no cover - reach tables are consistent by construction
            raise RuntimeError("witness reconstruction failed")
    return tuple(parts)


def _shift_or(prev: int, A: Sequence[int], mask: int) -> int:
    """OR of prev << a over a in A, using whichever side has fewer terms."""
    out = 0
    if prev.bit_count() < len(A):
        ind = 0
        for a in A:
            ind |= 1 << a
        p = prev
        while p:
            low = p & -p
            out |= ind << (low.bit_length() - 1)
            p ^= low
    else:
        for a in A:
            out |= prev << a
    return out & mask


def solve_bleichenbacher(A: WeightedIntegerSet, u=None, *, force: bool = False
                         ) -> BleichenbacherWitness:
    """Find a_1, ..., a_k in A with N - k < a_1 + ... + a_k <= N.

    With a member below sqrt(N) the answer is that member repeated N // a
    times. Otherwise a reachability DP over (parts, sum) picks the smallest
    k, then the largest total in the window, then the lexicographically
    smallest ascending multiset.

    Unless ``force`` is set, ``u`` is required and the guarantee's
    precondition must hold.
    """
    N = A.N
    if force:
        premise = (check_bleichenbacher_precondition(A, u).holds if u is not None else False)
    else:
        if u is None:
            raise DomainError("u is required unless force=True")
        premise = check_bleichenbacher_precondition(A, u).holds
        if not premise:
            raise DomainError("precondition sum 1/a > 1/u + 1/(sqrt(N)-1) fails; pass force=True to search anyway")
    if not A.members:
        raise CounterexampleError("empty set has no witness", premise_holds=premise)

    a0 = A.members[0]
    if a0 * a0 < N:
        k = N // a0
        w = BleichenbacherWitness(k, (a0,) * k, k * a0, "shortcut")
        _validate_witness(A, w)
        return w

    members = A.members
    mask = (1 << (N + 1)) - 1
    reach = [1]
    for k in range(1, N // a0 + 1):
        cur = _shift_or(reach[-1], members, mask)
        reach.append(cur)
        window = cur >> (N - k + 1)
        if window:
            total = N - k + window.bit_length()
            w = BleichenbacherWitness(k, _lex_smallest(members, reach, k, total), total)
            _validate_witness(A, w)
            return w
        if not cur:
            break
    raise CounterexampleError(
        f"no k-term sum lands in (N-k, N] for N={N}", premise_holds=premise
    )


def _validate_witness(A: WeightedIntegerSet, w: BleichenbacherWitness) -> None:
    if len(w.parts) != w.k or sum(w.parts) != w.total or not all(a in A for a in w.parts):
        raise RuntimeError(f"invalid witness {w}")
    if not A.N - w.k < w.total <= A.N:
        raise RuntimeError(f"witness total {w.total} outside (N-k, N]")


# -- representation counts --------------------------------------------------


@dataclass(frozen=True)
class RepCountTable:
    """c_k(t) = number of ordered k-tuples from A summing to t, for 0 <= t <= ceiling."""

    k: int
    counts: tuple[int, ...]
    ceiling: int

    def __getitem__(self, t: int) -> int:
        if 0 <= t <= self.ceiling:
            return self.counts[t]
        raise IndexError(t)

    def total(self) -> int:
        return sum(self.counts)

    def window(self, lo: int, hi: int) -> int:
        """Sum of c_k(t) over lo < t <= hi."""
        lo = max(lo + 1, 0)
        hi = min(hi, self.ceiling)
        return sum(self.counts[lo : hi + 1]) if lo <= hi else 0

    def nonzero(self) -> dict[int, int]:
        return {t: c for t, c in enumerate(self.counts) if c}

    def to_dict(self) -> dict:
        return {"k": self.k, "ceiling": self.ceiling,
                "counts": {str(t): c for t, c in self.nonzero().items()}}


def _pack(coeffs: Sequence[int], hexw: int) -> int:
    if not coeffs:
        return 0
    return int("".join(format(c, f"0{hexw}x") for c in reversed(coeffs)), 16)


def _unpack(value: int, hexw: int, length: int) -> list[int]:
    s = format(value, "x").zfill(hexw * length)
    s = s[-hexw * length :]
    return [int(s[i - hexw : i] or "0", 16) for i in range(len(s), 0, -hexw)]


def _iter_rep_counts(members: Sequence[int], kmax: int, ceiling: int) -> Iterator[list[int]]:
    """Yield c_1, ..., c_kmax truncated to [0, ceiling] via Kronecker substitution."""
    n = len(members)
    width_bits = max(1, (n**kmax).bit_length() + 1)
    hexw = -(-width_bits // 4)
    length = ceiling + 1
    cost = 4 * hexw * length
    if cost > PACKED_BIT_BUDGET:
        raise ResourceError(f"packed convolution needs {cost} bits", estimated_cost=cost)
    ind = [0] * length
    for a in members:
        if a <= ceiling:
            ind[a] = 1
    packed_ind = _pack(ind, hexw)
    keep = (1 << (4 * hexw * length)) - 1
    cur = packed_ind
    yield ind
    for _ in range(2, kmax + 1):
        cur = (cur * packed_ind) & keep
        yield _unpack(cur, hexw, length)


def _check_rep_args(A: WeightedIntegerSet, k: int, ceiling: int) -> None:
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if ceiling < 0:
        raise DomainError(f"ceiling must be non-negative, got {ceiling}")
    if k > MAX_ARITY or ceiling > MAX_CEILING:
        raise ResourceError(
            f"k={k}, ceiling={ceiling} outside the desk-scale limits (k <= {MAX_ARITY}, ceiling <= {MAX_CEILING})",
            estimated_cost=k * (ceiling + 1),
        )


def rep_count_table(A: WeightedIntegerSet, k: int, ceiling: int | None = None) -> RepCountTable:
    """Exact c_k for A, truncated above ``ceiling`` (default N)."""
    ceiling = A.N if ceiling is None else int(ceiling)
    _check_rep_args(A, k, ceiling)
    last = None
    for last in _iter_rep_counts(A.members, k, ceiling):
        pass
    return RepCountTable(k, tuple(last), ceiling)


def rep_count_tables(A: WeightedIntegerSet, kmax: int, ceiling: int | None = None) -> list[RepCountTable]:
    """c_1, ..., c_kmax in one pass."""
    ceiling = A.N if ceiling is None else int(ceiling)
    _check_rep_args(A, kmax, ceiling)
    return [RepCountTable(k, tuple(c), ceiling)
            for k, c in enumerate(_iter_rep_counts(A.members, kmax, ceiling), start=1)]


def windowed_count(A: WeightedIntegerSet, k: int, N: int | None = None) -> int:
    """Number of k-tuples from A with N - k < sum <= N."""
    N = A.N if N is None else int(N)
    return rep_count_table(A, k, N).window(N - k, N)


# -- Hypothesis A / A* ------------------------------------------------------


@dataclass(frozen=True)
class AlphaRow:
    k: int
    count: int
    alpha: Fraction
    alpha_float: float
    log_alpha: float

    def to_dict(self) -> dict:
        return {"k": self.k, "count": self.count, "alpha_rational": self.alpha,
                "alpha_float": self.alpha_float, "log_alpha": self.log_alpha}


@dataclass(frozen=True)
class HypothesisReport:
    N: int
    k_range: tuple[int, int]
    rows: tuple[AlphaRow, ...]
    best_k: int
    best_alpha: Fraction
    premises: dict = field(default_factory=dict)
    refinement_k_bound: float | None = None
    refinement_holds: bool | None = None
    measured_c: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "N": self.N,
            "k_range": list(self.k_range),
            "table": [r.to_dict() for r in self.rows],
            "best_k": self.best_k,
            "best_alpha": self.best_alpha,
            "best_alpha_float": fraction_to_float(self.best_alpha),
            "premises": dict(self.premises),
        }
        if self.refinement_k_bound is not None:
            out["refinement_k_bound"] = self.refinement_k_bound
            out["refinement_holds"] = self.refinement_holds
        if self.measured_c is not None:
            out["measured_c"] = {str(k): c for k, c in self.measured_c.items()}
        return out


def _alpha_rows(A: WeightedIntegerSet, N: int, k_lo: int, k_hi: int) -> list[AlphaRow]:
    size = len(A)
    rows = []
    for k, table in enumerate(_iter_rep_counts(A.members, k_hi, N), start=1):
        if k < k_lo:
            continue
        count = sum(table[max(N - k + 1, 0) : N + 1])
        alpha = Fraction(count * N, size**k)
        log_alpha = (math.log(count) + math.log(N) - k * math.log(size)) if count else -math.inf
        rows.append(AlphaRow(k, count, alpha, fraction_to_float(alpha), log_alpha))
    return rows


def _best(rows: list[AlphaRow]) -> AlphaRow:
    best = rows[0]
    for r in rows[1:]:
        if r.alpha > best.alpha:
            best = r
    return best


def _k_range(lo, hi) -> tuple[int, int]:
    k_lo, k_hi = max(math.ceil(lo), 1), math.floor(hi)
    if k_lo > k_hi:
        raise DomainError(f"empty k-range [{lo}, {hi}]")
    if k_hi > MAX_ARITY:
        raise ResourceError(f"k up to {k_hi} exceeds {MAX_ARITY}", estimated_cost=k_hi)
    return k_lo, k_hi


def hypothesis_a_check(A: WeightedIntegerSet, u, v, lam, N: int | None = None) -> HypothesisReport:
    """Measured alpha_k = #{k-tuples with N-k < sum <= N} * N / |A|^k for k in [u, v].

    Premise violations are recorded in ``premises``, not raised.
    """
    N = A.N if N is None else int(N)
    u, v, lam = to_fraction(u), to_fraction(v), to_fraction(lam)
    if not A.members:
        raise DomainError("A is empty")
    if not 1 <= u <= v:
        raise DomainError("need 1 <= u <= v")
    k_lo, k_hi = _k_range(u, v)
    rows = _alpha_rows(A, N, k_lo, k_hi)
    best = _best(rows)
    premises = {
        "members_in_range": all(N / v < a <= N / u for a in (A.members[0], A.members[-1])),
        "reciprocal_sum_condition": A.reciprocal_sum >= (1 + lam) / u,
        "N_large_enough": N >= (100 * v / lam) ** 2,
    }
    # some k <= e^{-1/u} v with alpha_k > 0
    cap = float(v) * math.exp(-1 / float(u))
    ok = any(r.count > 0 and compare_real(r.k, lambda: _mp(v) * mpmath.exp(-1 / _mp(u))) <= 0
             for r in rows)
    return HypothesisReport(N, (k_lo, k_hi), tuple(rows), best.k, best.alpha, premises, cap, ok)


def _mp(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def hypothesis_a_star_check(A: WeightedIntegerSet, u, lam, N: int | None = None) -> HypothesisReport:
    """Hypothesis A* variant: k in [u, u/lam], plus c = alpha_k^(1/k) * log u per row."""
    N = A.N if N is None else int(N)
    u, lam = to_fraction(u), to_fraction(lam)
    if not A.members:
        raise DomainError("A is empty")
    if u < 1 or not 0 < lam < 1:
        raise DomainError("need u >= 1 and 0 < lam < 1")
    k_lo, k_hi = _k_range(u, u / lam)
    rows = _alpha_rows(A, N, k_lo, k_hi)
    best = _best(rows)
    premises = {
        "members_in_range": all(lam * N / u < a <= N / u for a in (A.members[0], A.members[-1])),
        "N_large_enough": N >= (10 * u / lam) ** 2,
    }
    log_u = math.log(float(u))
    measured = {r.k: (math.exp(r.log_alpha / r.k) * log_u if r.count else 0.0) for r in rows}
    return HypothesisReport(N, (k_lo, k_hi), tuple(rows), best.k, best.alpha, premises,
                            measured_c=measured)


# -- dyadic pigeonhole ------------------------------------------------------


@dataclass(frozen=True)
class DyadicBand:
    j: int
    band: tuple[Fraction, Fraction]  # (lo, hi]
    band_sum: Fraction
    threshold: Fraction
    premise_holds: bool

    def to_dict(self) -> dict:
        return {"j": self.j, "band": list(self.band), "band_sum": self.band_sum,
                "band_sum_float": fraction_to_float(self.band_sum),
                "threshold": self.threshold, "premise_holds": self.premise_holds}


def dyadic_localization(A: WeightedIntegerSet, u, lam, N: int | None = None) -> DyadicBand:
    """Smallest j >= 0 whose band (N/(u0^(j+1) u), N/(u0^j u)] carries 1/a-mass
    at least (1 + lam/3)/(u0^j u), where u0 = 3/lam."""
    N = A.N if N is None else int(N)
    u, lam = to_fraction(u), to_fraction(lam)
    if u <= 0 or not 0 < lam < 1:
        raise DomainError("need u > 0 and 0 < lam < 1")
    u0 = 3 / lam
    premise = A.reciprocal_sum >= (1 + lam) / u
    members = A.members
    j = 0
    hi = Fraction(N) / u
    while members and hi >= members[0]:
        lo = hi / u0
        band = [a for a in members if lo < a <= hi]
        s = harmonic_sum(band)
        threshold = (1 + lam / 3) / (u0**j * u)
        if s >= threshold:
            return DyadicBand(j, (lo, hi), s, threshold, premise)
        j += 1
        hi = lo
    raise CounterexampleError("no band reaches its threshold", premise_holds=premise)


# -- popular doubling -------------------------------------------------------


@dataclass(frozen=True)
class DoublingDecomposition:
    i0: int
    bins: dict[int, int]
    E_size: int
    bad_pairs: int
    D: WeightedIntegerSet
    r_thresholds: dict[int, Fraction]
    sumset_size: int
    ecomplement_bound_holds: bool
    large_D_branch: bool
    premise_holds: bool

    def to_dict(self) -> dict:
        return {
            "i0": self.i0,
            "bins": {str(i): b for i, b in self.bins.items()},
            "E_size": self.E_size,
            "bad_pairs": self.bad_pairs,
            "D_size": len(self.D),
            "D": list(self.D.members),
            "r_thresholds": {str(i): r for i, r in self.r_thresholds.items()},
            "sumset_size": self.sumset_size,
            "ecomplement_bound_holds": self.ecomplement_bound_holds,
            "large_D_branch": self.large_D_branch,
            "premise_holds": self.premise_holds,
        }


def popular_doubling(A: WeightedIntegerSet, lam, u) -> DoublingDecomposition:
    """Bin the sums of 2A by representation count and split off the popular part.

    r_0 = 0, r_i = 2^(i-10) lam^4 |A|^2/|2A|; bin i holds n with
    r_i < r_2A(n) <= r_{i+1}. i0 is the smallest i >= 1 with
    |B_i| r_i >= lam^4 |A|^2 / (512 log u), certified with outward rounding of
    log u. D collects the n with r_2A(n) > r_i0.
    """
    lam, u = to_fraction(lam), to_fraction(u)
    if len(A) < 2:
        raise DomainError("popular_doubling needs |A| >= 2")
    if u <= 1 or not 0 < lam < 1:
        raise DomainError("need u > 1 and 0 < lam < 1")
    size = len(A)
    table = rep_count_table(A, 2, 2 * A.members[-1])
    r2 = table.nonzero()
    sumset = len(r2)
    base = lam**4 * size * size / sumset

    def r(i: int) -> Fraction:
        return Fraction(0) if i == 0 else base * Fraction(2) ** (i - 10)

    bins: dict[int, int] = {}
    for c in r2.values():
        # largest i with r_i < c
        i = 0
        if c > r(1):
            i = max(1, math.floor(math.log2(c / base)) + 10 - 1)
            while r(i + 1) < c:
                i += 1
            while i > 0 and r(i) >= c:
                i -= 1
        bins[i] = bins.get(i, 0) + 1
    last_bin = max(bins)
    thresholds = {i: r(i) for i in range(0, last_bin + 2)}

    target = lam**4 * size * size / 512
    i0 = None
    for i in range(1, last_bin + 1):
        b = bins.get(i, 0)
        if b == 0:
            continue
        # |B_i| r_i >= target / log u  <=>  log u >= target / (|B_i| r_i)
        q = target / (b * r(i))
        if compare_real(q, lambda: mpmath.log(_mp(u))) < 0 or q == 0:
            i0 = i
            break
    premise = (
        all(lam * A.N / u < a <= A.N / u for a in (A.members[0], A.members[-1]))
        and size >= lam * A.N / u**2
    )
    if i0 is None:
        raise CounterexampleError("no bin index i0 meets its threshold", premise_holds=premise)

    cut = r(i0)
    D = [n for n, c in sorted(r2.items()) if c > cut]
    E = sum(r2[n] for n in D)
    bad = size * size - E
    return DoublingDecomposition(
        i0=i0,
        bins=dict(sorted(bins.items())),
        E_size=E,
        bad_pairs=bad,
        D=WeightedIntegerSet(tuple(D), 2 * A.N),
        r_thresholds=thresholds,
        sumset_size=sumset,
        ecomplement_bound_holds=bad <= lam**4 / 64 * size * size,
        large_D_branch=len(D) > Fraction(8 * A.N) / u**2,
        premise_holds=premise,
    )
