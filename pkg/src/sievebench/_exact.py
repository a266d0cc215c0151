"""Exact rational helpers: reciprocal sums, certified comparisons, formatting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath

from .errors import ValidationError

# Denominator size at which exact reciprocal sums switch to fixed point.
EXACT_DENOMINATOR_BITS = 512
# Fractional bits of the fixed-point fallback; each term contributes < 2**-FIXED_BITS.
FIXED_BITS = 128

_PRECISIONS = (64, 128, 256, 512, 1024, 4096)


def to_fraction(value) -> Fraction:
    """Convert int, float, Fraction or a ``"p/q"`` string to a Fraction exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite number {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse rational {value!r}") from exc
    raise ValidationError(f"expected a number, got {type(value).__name__}")


def format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def fraction_to_float(value: Fraction) -> float:
    try:
        return float(value)
    except OverflowError:
        return math.inf if value > 0 else -math.inf


def harmonic_sum(values: Iterable[int]) -> Fraction:
    """Exact sum of 1/a, added pairwise so operand sizes stay balanced."""
    terms = [Fraction(1, int(a)) for a in values]
    if not terms:
        return Fraction(0)
    while len(terms) > 1:
        paired = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            paired.append(terms[-1])
        terms = paired
    return terms[0]


@dataclass(frozen=True)
class ReciprocalSum:
    """Sum of 1/a over a list of positive integers, held as a certified bracket.

    Small sums are exact (``lower == upper``). Once the running denominator
    passes ``EXACT_DENOMINATOR_BITS`` the remaining terms are added in
    fixed point, so ``lower <= true value <= upper`` with a gap below
    ``len(terms) * 2**-FIXED_BITS``. ``switched_at`` records the term index
    where that happened.
    """

    lower: Fraction
    upper: Fraction
    switched_at: int | None = None
    terms: Sequence[int] = field(default=(), repr=False, compare=False)

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> float:
        if self.exact:
            return fraction_to_float(self.lower)
        return fraction_to_float((self.lower + self.upper) / 2)

    def exact_value(self) -> Fraction:
        if self.exact:
            return self.lower
        return harmonic_sum(self.terms)

    def at_least(self, threshold) -> bool:
        t = to_fraction(threshold)
        if self.lower >= t:
            return True
        if self.upper < t:
            return False
        return self.exact_value() >= t

    def greater_than(self, threshold) -> bool:
        t = to_fraction(threshold)
        if self.lower > t:
            return True
        if self.upper <= t:
            return False
        return self.exact_value() > t

    def __add__(self, other: "ReciprocalSum") -> "ReciprocalSum":
        switched = None
        if self.switched_at is not None or other.switched_at is not None:
            switched = self.switched_at if self.switched_at is not None else len(self.terms)
        return ReciprocalSum(
            self.lower + other.lower,
            self.upper + other.upper,
            switched,
            tuple(self.terms) + tuple(other.terms),
        )


def reciprocal_sum(values: Sequence[int], *, exact_bits: int = EXACT_DENOMINATOR_BITS,
                   fixed_bits: int = FIXED_BITS) -> ReciprocalSum:
    terms = [int(a) for a in values]
    acc = Fraction(0)
    for i, a in enumerate(terms):
        if acc.denominator.bit_length() > exact_bits:
            scale = 1 << fixed_bits
            lo = (acc.numerator * scale) // acc.denominator
            hi = -((-acc.numerator * scale) // acc.denominator)
            for b in terms[i:]:
                q, r = divmod(scale, b)
                lo += q
                hi += q + (1 if r else 0)
            return ReciprocalSum(Fraction(lo, scale), Fraction(hi, scale), i, terms)
        acc += Fraction(1, a)
    return ReciprocalSum(acc, acc, None, terms)


def mpf_to_fraction(x) -> Fraction:
    man, exp = mpmath.mpf(x).man_exp
    man = int(man)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


def real_bracket(fn: Callable[[], object], prec: int) -> tuple[Fraction, Fraction]:
    """Rational bracket around the real ``fn()`` evaluated with mpmath at ``prec`` bits.

    ``fn`` must build its value from mpmath operations on exact inputs; the
    bracket assumes a few ulps of accumulated rounding.
    """
    with mpmath.workprec(prec):
        x = fn()
    mid = mpf_to_fraction(x)
    slack = Fraction(1, 2 ** (prec - 8)) * (abs(mid) + 1)
    return mid - slack, mid + slack


def compare_real(q, fn: Callable[[], object]) -> int:
    """Sign of ``q - fn()`` decided with increasing precision; 0 if indistinguishable."""
    q = to_fraction(q)
    for prec in _PRECISIONS:
        lo, hi = real_bracket(fn, prec)
        if q > hi:
            return 1
        if q < lo:
            return -1
    return 0


def sqrt_bracket(n: int, bits: int) -> tuple[Fraction, Fraction]:
    """Rational bounds on sqrt(n) at most 2**-bits apart (equal when n is a square)."""
    r = math.isqrt(n)
    if r * r == n:
        return Fraction(r), Fraction(r)
    s = math.isqrt(n << (2 * bits))
    return Fraction(s, 1 << bits), Fraction(s + 1, 1 << bits)
