import dataclasses
import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sievebench import errors
from sievebench.primereduce import (build_rho_grid, cell_tuple_consistent, hyp_p_check,
                                    hyp_p_tuple_count, localize, verify_localization)
from sievebench.primeset import PrimeSet
from sievebench.sumsolve import WeightedIntegerSet

from oracles import brute_tuple_products, exact_sum, trial_division_primes

PRIMES_200 = trial_division_primes(200)


def _mp(q):
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / q.denominator


def test_grid_rho_exact():
    g = build_rho_grid(10**4, 1, 1, 1)
    assert g.rho == 1 + Fraction(1, 10**6)
    g = build_rho_grid(10**6, 1, 2, Fraction(1, 2))
    assert g.rho == 1 + Fraction(1, 4000) ** 2


def test_grid_N_in_extended_precision():
    with mpmath.workdps(60):
        g = build_rho_grid(mpmath.e, 1, 3, Fraction(1, 3))
        want = 1 / mpmath.log(_mp(g.rho)) - 3
        assert abs(_mp(g.N) - want) < mpmath.mpf(10) ** -25
        g = build_rho_grid(10**6, 1, 2, Fraction(1, 2))
        want = mpmath.log(10**6) / mpmath.log(1 + mpmath.mpf(1) / 4000**2) - 2
        assert abs(_mp(g.N) - want) < mpmath.mpf(10) ** -20
    assert float(g.N) == pytest.approx(math.log(1e6) / math.log1p(1 / 4000**2) - 2, rel=1e-9)


@pytest.mark.parametrize("args", [(10**4, 2, 1, Fraction(1, 2)), (10**4, 0, 1, Fraction(1, 2)),
                                  (10**4, 1, 2, 0), (10**4, 1, 2, 2), (1, 1, 2, Fraction(1, 2))])
def test_grid_rejects_bad_parameters(args):
    with pytest.raises(errors.DomainError):
        build_rho_grid(*args)


def test_cell_of_matches_high_precision_logs():
    g = build_rho_grid(10**6, 1, 4, Fraction(1, 4))
    ps = np.array(trial_division_primes(3000)[::7], dtype=np.int64)
    with mpmath.workprec(200):
        lr = mpmath.log(_mp(g.rho))
        want = [int(mpmath.floor(mpmath.log(int(p)) / lr)) for p in ps]
    assert g.cell_of(ps).tolist() == want


def _cell_oracle(grid, primes):
    """A_0 and its exact mass from mpmath cells and Fraction sums."""
    lo_a = math.floor(grid.N / grid.v) + 1
    hi_a = math.floor(grid.N / grid.u)
    with mpmath.workprec(200):
        lr = mpmath.log(_mp(grid.rho))
        cells = {}
        for p in primes:
            a = int(mpmath.floor(mpmath.log(p) / lr))
            if lo_a <= a <= hi_a:
                cells.setdefault(a, []).append(p)
    A0 = sorted(a for a, ps in cells.items() if a * exact_sum(ps) >= 1)
    mass = sum((exact_sum(cells[a]) for a in A0), Fraction(0))
    return A0, mass


def test_localize_all_primes_first_index():
    x = 10**5
    pset = PrimeSet.all_primes(x)
    grid = build_rho_grid(x, 1, 4, Fraction(1, 4))
    loc = localize(pset, grid)
    assert loc.j0 == 0 and loc.j0 <= loc.J0
    assert loc.J0 == pytest.approx(math.log(20 * 4 * math.log(4) * 4))
    assert loc.premise_holds and loc.verified
    A0, mass = _cell_oracle(grid, pset.members.tolist())
    assert list(loc.A.members) == A0
    assert loc.cell_weight_sum.lower <= mass <= loc.cell_weight_sum.upper
    assert mass >= 1 + Fraction(1, 12)
    assert verify_localization(pset, grid, loc)
    weights = dict(loc.cell_weights)
    assert sum(weights.values(), Fraction(0)) == mass


def test_localize_detects_tampering():
    x = 10**4
    pset = PrimeSet.all_primes(x)
    grid = build_rho_grid(x, 1, 4, Fraction(1, 4))
    loc = localize(pset, grid)
    smaller = dataclasses.replace(loc, A=WeightedIntegerSet(loc.A.members[1:], loc.A.N))
    assert not verify_localization(pset, grid, smaller)
    shifted = dataclasses.replace(loc, j0=1)
    assert not verify_localization(pset, grid, shifted)


def test_localize_empty_window_reports_premise_failure():
    x = 10**4
    pset = PrimeSet.upto(x, 10)  # nothing in (x^(1/4), x]
    grid = build_rho_grid(x, 1, 4, Fraction(1, 4))
    with pytest.raises(errors.CounterexampleError) as info:
        localize(pset, grid)
    assert info.value.premise_holds is False


def test_localize_single_heavy_cell():
    # x = 1e4, v = 14 puts 2 inside (x^(1/v), x^(1/u)]; its cell carries 1/2 >= (1 + lam/3)/3
    x, u, v, lam = 10**4, 3, 14, Fraction(1, 10)
    pset = PrimeSet.from_primes(x, [2])
    grid = build_rho_grid(x, u, v, lam)
    loc = localize(pset, grid)
    assert loc.j0 == 0 and len(loc.A) == 1
    assert loc.A.members[0] == grid.cell_of(np.array([2]))[0]
    assert dict(loc.cell_weights) == {loc.A.members[0]: Fraction(1, 2)}
    assert loc.verified


def test_localize_preconditions():
    grid = build_rho_grid(10**3, 1, 2, Fraction(1, 2))
    with pytest.raises(errors.DomainError):
        localize(PrimeSet.all_primes(10**3), grid)
    grid = build_rho_grid(10**5, 1, 2, Fraction(1, 2))
    with pytest.raises(errors.DomainError):
        localize(PrimeSet.all_primes(10**4), grid)


def test_localize_report_shape():
    grid = build_rho_grid(10**4, 1, 4, Fraction(1, 4))
    doc = localize(PrimeSet.all_primes(10**4), grid).to_dict()
    assert {"j0", "J0", "cells", "verified"} <= set(doc)
    assert isinstance(doc["cells"], int)


# -- tuple counts -------------------------------------------------------------


def test_tuple_count_examples():
    assert hyp_p_tuple_count(PrimeSet.from_primes(20, [2, 3]), 16, 4) == 1
    assert hyp_p_tuple_count(PrimeSet.from_primes(20, [3, 5]), 15, 2) == 3
    assert brute_tuple_products([3, 5], 15, 2) == 3
    assert hyp_p_tuple_count(PrimeSet.from_primes(100, [11, 53]), 100, 1) == 1
    assert hyp_p_tuple_count(PrimeSet.from_primes(100, [11, 53, 97]), 100, 1) == 2


@given(st.sets(st.sampled_from(PRIMES_200), min_size=1, max_size=8), st.integers(1, 5),
       st.integers(1, 10**6))
@settings(max_examples=200, deadline=None)
def test_tuple_count_matches_brute_force(P, k, x):
    got = hyp_p_tuple_count(PrimeSet.from_primes(200, P), x, k)
    assert got == brute_tuple_products(sorted(P), x, k)


def test_tuple_count_big_integer_path():
    P = [1000003, 1000033, 1000037, 1000039]
    pset = PrimeSet.from_primes(1000039, P)
    x = 1000039 * 1000037 * 1000033 * 1000003 * 1000039
    assert x >= 2**62
    assert hyp_p_tuple_count(pset, x, 5) == brute_tuple_products(P, x, 5)


def test_tuple_count_budget():
    pset = PrimeSet.all_primes(10**4)
    with pytest.raises(errors.ResourceError):
        hyp_p_tuple_count(pset, 10**16, 4, budget=10**5)


def test_hyp_p_table_against_brute_force():
    P = [11, 13, 17, 19, 23, 29, 31, 37]
    x = 10**4
    pset = PrimeSet.from_primes(x, P)
    rep = hyp_p_check(pset, x, 1, 4, Fraction(1, 4))
    assert rep.k_range == (1, 4)
    for row in rep.rows:
        c = brute_tuple_products(P, x, row.k)
        assert row.count == c
        assert row.pi == pytest.approx(c * 4**row.k * math.log(x) / x, rel=1e-12)
    best = max(rep.rows, key=lambda r: (r.pi, -r.k))
    assert rep.best_k == best.k
    assert rep.premises["members_in_window"]


def test_hyp_p_zero_table_and_guards():
    pset = PrimeSet.from_primes(10**4, [9973])
    rep = hyp_p_check(pset, 10**4, 2, 3, Fraction(1, 4))
    assert all(r.count == 0 for r in rep.rows) and not rep.refinement_holds
    with pytest.raises(errors.DomainError):
        hyp_p_check(pset, 10**4, 3, 2, Fraction(1, 4))


def test_hyp_p_premise_flags():
    x = 10**6
    rep = hyp_p_check(PrimeSet.all_primes(x), x, 1, 2, Fraction(1, 4))
    assert rep.premises["members_in_window"] is False
    assert rep.premises["v_bound"] is False


def _near_products(x, radius, small_primes):
    """Prime tuples (k = 1 and k = 2) whose product lies within radius of x."""
    out = []
    for n in range(x - radius, x + radius + 1):
        f, m = [], n
        for p in small_primes:
            if p * p > m:
                break
            while m % p == 0:
                f.append(p)
                m //= p
        if m > 1:
            f.append(m)
        if len(f) <= 2:
            out.append(f)
    return out


def test_cell_tuples_consistent_with_products():
    # cell sums in (N-k, N] pin the product to (x rho^(-v-k), x rho^(k-v)); at x = 1e9 with
    # lam = 1 and v = 2 that interval is ~1000 integers wide, so witnesses exist
    x = 10**9
    grid = build_rho_grid(x, 1, 2, 1)
    small = trial_division_primes(32000)
    seen = {True: 0, None: 0}
    for tup in _near_products(x, 3000, small):
        res = cell_tuple_consistent(grid, tup)
        assert res is not False
        seen[res] += 1
        prod = math.prod(tup)
        if res is None and x // 2 <= prod <= x:
            cells = sum(grid.cell_of(np.array(tup, dtype=np.int64)).tolist())
            assert not grid.N - len(tup) < cells <= grid.N
    assert seen[True] > 10 and seen[None] > 10


def test_cell_tuples_at_one_million_never_inconsistent():
    x = 10**6
    grid = build_rho_grid(x, 1, 4, Fraction(1, 4))
    rng = random.Random(7)
    pool = trial_division_primes(x // 32)
    for _ in range(2000):
        k = rng.randint(1, 4)
        tup = [rng.choice(pool) for _ in range(k)]
        assert cell_tuple_consistent(grid, tup) is not False
