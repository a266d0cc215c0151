"""Dense two-phase simplex over Fractions with Bland's rule.

Small problems only (a few dozen rows); every pivot is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Fraction, ...] | None = None
    value: Fraction | None = None


def _pivot(T: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    row = T[r]
    pv = row[c]
    if pv != 1:
        T[r] = row = [v / pv for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _run(T, basis, n_cols: int, allowed) -> str:
    """Maximize the objective stored in the last row (as reduced costs, negated)."""
    m = len(T) - 1
    while True:
        obj = T[-1]
        enter = next((j for j in range(n_cols) if allowed(j) and obj[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], enter)


def linprog_max(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
                A_eq: Sequence[Sequence] = (), b_eq: Sequence = ()) -> LPResult:
    """maximize c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0."""
    n = len(c)
    rows: list[tuple[list[Fraction], Fraction, int]] = []  # coefficients, rhs, slack sign
    for a, b in zip(A_ub, b_ub):
        rows.append(([Fraction(v) for v in a], Fraction(b), 1))
    for a, b in zip(A_eq, b_eq):
        rows.append(([Fraction(v) for v in a], Fraction(b), 0))
    m = len(rows)
    n_slack = sum(1 for r in rows if r[2])
    width = n + n_slack + m  # structural, slack, artificial
    T: list[list[Fraction]] = []
    basis: list[int] = []
    s = 0
    for i, (a, b, has_slack) in enumerate(rows):
        line = a + [Fraction(0)] * (n_slack + m) + [b]
        if has_slack:
            line[n + s] = Fraction(1)
            s += 1
        if b < 0:
            line = [-v for v in line]
        line[n + n_slack + i] = Fraction(1)
        T.append(line)
        basis.append(n + n_slack + i)

    # phase 1: maximize -(sum of artificials)
    obj = [Fraction(0)] * (width + 1)
    for line in T:
        obj = [o - v for o, v in zip(obj, line)]
    for i in range(m):
        obj[n + n_slack + i] = Fraction(0)
    T.append(obj)
    _run(T, basis, width, lambda j: True)
    if T[-1][-1] != 0:
        return LPResult("infeasible")

    # drive artificials out of the basis; drop redundant rows
    art0 = n + n_slack
    i = 0
    while i < len(T) - 1:
        if basis[i] >= art0:
            col = next((j for j in range(art0) if T[i][j] != 0), None)
            if col is None:
                del T[i]
                del basis[i]
                continue
            _pivot(T, basis, i, col)
        i += 1

    # phase 2
    T = [line[:art0] + [line[-1]] for line in T[:-1]]
    obj = [Fraction(0)] * (art0 + 1)
    for j, cj in enumerate(c):
        obj[j] = -Fraction(cj)
    for i, bvar in enumerate(basis):
        f = obj[bvar]
        if f:
            obj = [o - f * v for o, v in zip(obj, T[i])]
    T.append(obj)
    status = _run(T, basis, art0, lambda j: True)
    if status != "optimal":
        return LPResult(status)
    x = [Fraction(0)] * art0
    for i, bvar in enumerate(basis):
        x[bvar] = T[i][-1]
    return LPResult("optimal", tuple(x[:n]), T[-1][-1])


def basic_feasible_solution(A_eq: Sequence[Sequence], b_eq: Sequence) -> tuple[Fraction, ...] | None:
    """A vertex of {x >= 0 : A_eq x = b_eq} (at most rank(A_eq) nonzeros), or None."""
    n = len(A_eq[0]) if A_eq else 0
    res = linprog_max([0] * n, A_eq=A_eq, b_eq=b_eq)
    return res.x if res.status == "optimal" else None
