"""Prime generation, sieving sets of primes, reciprocal sums and Mertens products."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import mpmath
import numpy as np

from ._exact import ReciprocalSum, reciprocal_sum, to_fraction
from .errors import DomainError, ResourceError, ValidationError

SIEVE_CEILING = 2**31
SEGMENT_SIZE = 2**20


def _small_sieve(limit: int) -> np.ndarray:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


@lru_cache(maxsize=8)
def _cached_primes(limit: int, segment_size: int) -> np.ndarray:
    root = math.isqrt(limit)
    base = _small_sieve(root)
    chunks = [base]
    lo = root + 1
    while lo <= limit:
        hi = min(lo + segment_size, limit + 1)
        flags = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, -(-lo // p) * p)
            flags[start - lo :: p] = False
        chunks.append(np.flatnonzero(flags).astype(np.int64) + lo)
        lo = hi
    out = np.concatenate(chunks)
    out.setflags(write=False)
    return out


def generate_primes(limit: int, *, segment_size: int = SEGMENT_SIZE,
                    ceiling: int = SIEVE_CEILING) -> np.ndarray:
    """All primes in [2, limit], ascending, from a segmented sieve of Eratosthenes.

    The returned array is read-only and may be shared between callers.
    """
    limit = int(limit)
    if limit < 1:
        raise DomainError(f"limit must be a positive integer, got {limit}")
    if limit > ceiling:
        raise ResourceError(
            f"limit {limit} exceeds the sieve ceiling {ceiling}", estimated_cost=limit
        )
    if limit < 2:
        out = np.zeros(0, dtype=np.int64)
        out.setflags(write=False)
        return out
    return _cached_primes(limit, int(segment_size))


@dataclass(frozen=True)
class Edit:
    op: str
    interval: tuple[int, int] | None = None
    primes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.op not in ("add", "remove"):
            raise ValidationError(f"edit op must be 'add' or 'remove', got {self.op!r}")
        if (self.interval is None) == (self.primes is None):
            raise ValidationError("an edit needs exactly one of 'interval' or 'list'")

    def flipped(self) -> "Edit":
        return Edit("remove" if self.op == "add" else "add", self.interval, self.primes)

    def to_dict(self) -> dict:
        if self.interval is not None:
            return {"op": self.op, "interval": list(self.interval)}
        return {"op": self.op, "list": list(self.primes)}


def _as_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class PrimeSet:
    """A set of primes <= ``limit``: a base ("all" or "none") with ordered edits.

    Membership is materialized lazily into a sorted, read-only ``members``
    array and cached on the instance.
    """

    limit: int
    base: str = "all"
    edits: tuple[Edit, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "limit", _as_int(self.limit, "limit"))
        if self.limit < 1:
            raise ValidationError(f"limit must be positive, got {self.limit}")
        if self.base not in ("all", "none"):
            raise ValidationError(f"base must be 'all' or 'none', got {self.base!r}")
        object.__setattr__(self, "edits", tuple(self.edits))
        for e in self.edits:
            if e.interval is not None:
                lo, hi = e.interval
                if not (2 <= lo <= hi <= self.limit):
                    raise ValidationError(
                        f"edit interval {[lo, hi]} is not inside [2, {self.limit}]"
                    )
            else:
                bad = [p for p in e.primes if not 2 <= p <= self.limit]
                if bad:
                    raise ValidationError(f"edit list entries outside [2, {self.limit}]: {bad[:5]}")

    # -- construction -----------------------------------------------------

    @classmethod
    def all_primes(cls, limit: int) -> "PrimeSet":
        return cls(limit, "all")

    @classmethod
    def empty(cls, limit: int) -> "PrimeSet":
        return cls(limit, "none")

    @classmethod
    def upto(cls, limit: int, bound: int) -> "PrimeSet":
        """Primes <= min(bound, limit)."""
        bound = min(int(bound), int(limit))
        if bound < 2:
            return cls(limit, "none")
        return cls(limit, "none", (Edit("add", interval=(2, bound)),))

    @classmethod
    def from_primes(cls, limit: int, primes: Iterable[int]) -> "PrimeSet":
        primes = tuple(sorted({int(p) for p in primes}))
        if not primes:
            return cls(limit, "none")
        return cls(limit, "none", (Edit("add", primes=primes),))

    @classmethod
    def from_dict(cls, doc: dict) -> "PrimeSet":
        if not isinstance(doc, dict):
            raise ValidationError("prime set document must be a JSON object")
        unknown = set(doc) - {"limit", "base", "edits"}
        if unknown:
            raise ValidationError(f"unknown prime set fields: {sorted(unknown)}")
        if "limit" not in doc:
            raise ValidationError("prime set document needs 'limit'")
        edits = []
        for raw in doc.get("edits", []):
            if not isinstance(raw, dict):
                raise ValidationError("each edit must be a JSON object")
            extra = set(raw) - {"op", "interval", "list"}
            if extra:
                raise ValidationError(f"unknown edit fields: {sorted(extra)}")
            op = raw.get("op")
            if "interval" in raw:
                iv = raw["interval"]
                if not isinstance(iv, list) or len(iv) != 2:
                    raise ValidationError("'interval' must be a two-element list")
                edits.append(Edit(op, interval=(_as_int(iv[0], "interval"), _as_int(iv[1], "interval"))))
            elif "list" in raw:
                if not isinstance(raw["list"], list):
                    raise ValidationError("'list' must be a JSON array")
                edits.append(Edit(op, primes=tuple(_as_int(p, "prime") for p in raw["list"])))
            else:
                raise ValidationError("an edit needs 'interval' or 'list'")
        return cls(_as_int(doc["limit"], "limit"), doc.get("base", "all"), tuple(edits))

    def to_dict(self) -> dict:
        return {"limit": self.limit, "base": self.base, "edits": [e.to_dict() for e in self.edits]}

    # -- materialization --------------------------------------------------

    @cached_property
    def members(self) -> np.ndarray:
        universe = generate_primes(self.limit)
        mask = np.full(len(universe), self.base == "all")
        for e in self.edits:
            value = e.op == "add"
            if e.interval is not None:
                lo, hi = e.interval
                i = np.searchsorted(universe, lo, side="left")
                j = np.searchsorted(universe, hi, side="right")
                mask[i:j] = value
            else:
                wanted = np.asarray(e.primes, dtype=np.int64)
                idx = np.searchsorted(universe, wanted)
                idx_ok = idx < len(universe)
                ok = np.zeros(len(wanted), dtype=bool)
                ok[idx_ok] = universe[idx[idx_ok]] == wanted[idx_ok]
                if not ok.all():
                    raise ValidationError(f"edit list contains non-primes: {wanted[~ok][:5].tolist()}")
                mask[idx] = value
        out = universe[mask]
        out.setflags(write=False)
        return out

    def materialize(self) -> np.ndarray:
        return self.members

    def complement(self) -> "PrimeSet":
        """Primes <= limit that are not members."""
        return PrimeSet(self.limit, "none" if self.base == "all" else "all",
                        tuple(e.flipped() for e in self.edits))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members.tolist())

    def __contains__(self, p) -> bool:
        m = self.members
        i = np.searchsorted(m, p)
        return bool(i < len(m) and m[i] == p)

    def between(self, lo, hi) -> np.ndarray:
        """Members p with lo < p <= hi (bounds may be real)."""
        m = self.members
        i = np.searchsorted(m, math.floor(lo), side="right")
        j = np.searchsorted(m, math.floor(hi), side="right")
        return m[i:j]


@dataclass(frozen=True)
class ConditionWitness:
    u: float
    v: float
    epsilon: float
    sum_value: Fraction  # exact, or a certified lower bound when sum_exact is False
    sum_float: float
    sum_exact: bool


def reciprocal_prime_sum(pset: PrimeSet, lo, hi) -> ReciprocalSum:
    """Sum of 1/p over members p with lo < p <= hi.

    Exact while the denominator stays below 2**512, then a certified
    fixed-point bracket (``ReciprocalSum.switched_at`` marks the switch).
    """
    if not (0 <= lo <= hi <= pset.limit):
        raise DomainError(f"need 0 <= lo <= hi <= limit, got ({lo}, {hi}] with limit {pset.limit}")
    return reciprocal_sum(pset.between(lo, hi).tolist())


def mertens_product(pset: PrimeSet, upto: int | None = None) -> float:
    """Product of (1 - 1/p) over primes p <= upto (default: limit) not in the set."""
    upto = pset.limit if upto is None else int(upto)
    if upto < 2:
        return 1.0
    universe = generate_primes(upto)
    inside = pset.members[pset.members <= upto]
    sieved = np.setdiff1d(universe, inside, assume_unique=True)
    if len(sieved) == 0:
        return 1.0
    logs = np.log1p(-1.0 / sieved.astype(np.float64))
    return math.exp(math.fsum(logs.tolist()))


def floor_root(x: int, e) -> int:
    """floor(x ** (1/e)) for integer x >= 1 and real e >= 1, exact at integer roots."""
    e = float(e)
    r = int(x ** (1.0 / e))
    with mpmath.workprec(200):
        ex = mpmath.mpf(e)
        while mpmath.power(r + 1, ex) <= x:
            r += 1
        while r > 0 and mpmath.power(r, ex) > x:
            r -= 1
    return r


def v_bound(x: int, denominator=1000) -> float:
    """log x / (denominator * log log x), the admissible ceiling on v."""
    lx = math.log(x)
    return lx / (float(denominator) * math.log(lx))


def scan_theorem_condition(pset: PrimeSet, epsilon, *, ratio: float = 1.05,
                           denominator=1000, grid: Sequence[float] | None = None
                           ) -> ConditionWitness | None:
    """Smallest u on a grid with sum_{x^(1/v) < p <= x^(1/u)} 1/p >= (1+eps)/u.

    ``x`` is the set's limit and v is pinned to ``v_bound(x, denominator)``;
    grid points outside [1, v] are skipped.
    """
    x = pset.limit
    if x < 10**4:
        raise DomainError(f"scanner needs limit >= 10^4, got {x}")
    eps = to_fraction(epsilon)
    if eps <= 0:
        raise DomainError("epsilon must be positive")
    v = v_bound(x, denominator)
    if grid is None:
        us = []
        u = 1.0
        while u <= v:
            us.append(u)
            u *= ratio
    else:
        us = sorted(float(u) for u in grid if 1 <= u <= v)
    if not us:
        return None

    members = pset.members
    prefix = np.concatenate([[0.0], np.cumsum(1.0 / members.astype(np.float64))])
    lo_bound = floor_root(x, v)
    for u in us:
        hi_bound = floor_root(x, u)
        i = np.searchsorted(members, lo_bound, side="right")
        j = np.searchsorted(members, hi_bound, side="right")
        target = (1 + eps) / to_fraction(u)
        approx = prefix[j] - prefix[i]
        if approx < float(target) * (1 - 1e-9):
            continue
        s = reciprocal_sum(members[i:j].tolist())
        if s.at_least(target):
            if s.exact:
                value, exact = s.lower, True
            elif s.lower >= target:
                value, exact = s.lower, False
            else:
                value, exact = s.exact_value(), True
            return ConditionWitness(u, v, float(epsilon), value, s.value, exact)
    return None
