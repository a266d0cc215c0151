import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from sievebench import errors
from sievebench.latticegeom import (LatticeBox, basic_feasible_solution, boundary_shell_count,
                                    check_volume_bound, convex_hull, epsilon_regularize,
                                    inscribe_box, is_epsilon_regular, linprog_max,
                                    neighbourhood_counts, popular_sf_density,
                                    shapley_folkman_decompose)

import geomcheck
from oracles import brute_hull_volume


def pts_strategy(d, lo=-4, hi=4, max_size=10):
    return st.lists(st.tuples(*[st.integers(lo, hi)] * d), min_size=1, max_size=max_size)


# -- hull ---------------------------------------------------------------------


def test_hull_examples():
    h = convex_hull([(0, 0), (2, 0), (0, 2), (1, 1)])
    assert set(h.vertices) == {(0, 0), (2, 0), (0, 2)} and h.volume == 2
    h = convex_hull([(3, -1, 2)])
    assert h.dim == 0 and h.volume == 0
    h = convex_hull([(0,), (5,)])
    assert h.dim == 1 and h.volume == 5 and h.bounding_box == ((0,), (5,))


def test_hull_unit_cube_and_simplex():
    cube = list(itertools.product((0, 1), repeat=3))
    h = geomcheck.check_hull(cube + [(0, 0, 0)])
    assert h.volume == 1 and len(h.facets) == 6
    h = geomcheck.check_hull([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
    assert h.volume == Fraction(1, 6) and len(h.facets) == 4


def test_hull_degenerate_dimensions():
    assert convex_hull([(0, 0, 0), (1, 1, 1), (2, 2, 2)]).dim == 1
    h = convex_hull([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)])
    assert h.dim == 2 and h.volume == 0
    assert h.contains((Fraction(1, 2), Fraction(1, 3), 0)) and not h.contains((0, 0, 1))


@pytest.mark.parametrize("d", [1, 2, 3])
@given(data=st.data())
@settings(max_examples=80, deadline=None)
def test_hull_certification(d, data):
    geomcheck.check_hull(data.draw(pts_strategy(d)))


@given(pts_strategy(2, max_size=14))
@settings(max_examples=80, deadline=None)
def test_hull_contains_agrees_with_facets(pts):
    h = convex_hull(pts)
    for y in itertools.product(range(-5, 6), repeat=2):
        assert h.contains(y) == geomcheck.in_hull(h, y)


def test_hull_volume_matches_oracle_on_grid_subsets():
    rng = random.Random(3)
    for _ in range(30):
        pts = rng.sample(list(itertools.product(range(4), repeat=3)), rng.randint(4, 12))
        assert convex_hull(pts).volume == brute_hull_volume(pts)


# -- volume bound -------------------------------------------------------------


def test_volume_bound_examples():
    box = LatticeBox((5,))
    r = check_volume_bound(box.points(), box, Fraction(1, 2))
    assert r.volume == 10 and r.c_measured == Fraction(10, 11) and r.premise_holds
    box = LatticeBox((3, 3))
    r = check_volume_bound([(i, i) for i in range(-3, 4)], box, Fraction(1, 100))
    assert r.volume == 0 and not r.bound_holds
    box = LatticeBox((2, 3))
    r = check_volume_bound(box.corners(), box, Fraction(1, 100))
    assert r.volume == box.volume == 24 and r.c_measured == Fraction(24, 35)


def test_volume_bound_reports_low_density():
    box = LatticeBox((4, 4))
    r = check_volume_bound([(0, 0), (1, 0), (0, 1)], box, Fraction(1, 2))
    assert not r.premise_holds and r.volume == Fraction(1, 2)
    with pytest.raises(errors.DomainError):
        check_volume_bound([], box, Fraction(1, 2))


# -- inscribed box ------------------------------------------------------------


def test_inscribe_corners():
    box = LatticeBox((3, 2))
    res = inscribe_box(box.corners(), box)
    assert res.beta == 1 and res.x0 == (0, 0) and res.certified


def test_inscribe_cross_polytope():
    res = inscribe_box([(1, 0), (-1, 0), (0, 1), (0, -1)], LatticeBox((1, 1)))
    assert res.beta == Fraction(1, 2) and res.x0 == (0, 0) and res.certified


def test_inscribe_interval():
    box = LatticeBox((10,))
    res = inscribe_box([(i,) for i in range(11)], box)
    assert res.x0 == (5,) and res.certified
    assert res.beta >= Fraction(1, 4)
    assert res.beta == Fraction(1, 2)  # 5 + [-5, 5] = [0, 10] is the optimum
    hull = convex_hull([(0,), (10,)])
    quarter = Fraction(1, 4) * 10
    assert hull.contains((5 - quarter,)) and hull.contains((5 + quarter,))


def test_inscribe_degenerate_raises():
    with pytest.raises(errors.DimensionError):
        inscribe_box([(0, 0), (1, 1), (2, 2)], LatticeBox((3, 3)))
    with pytest.raises(errors.DimensionError):
        inscribe_box([], LatticeBox((3,)))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_inscribe_certification_random(d):
    rng = random.Random(10 + d)
    done = 0
    while done < 40:
        box, pts = geomcheck.random_geometry_instance(rng, d)
        if convex_hull(pts).full_dimensional:
            geomcheck.check_inscribe(pts, box)
            done += 1


def test_linprog_small_problems():
    res = linprog_max([1, 1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    assert res.status == "optimal" and res.value == Fraction(14, 5)
    assert res.x == (Fraction(8, 5), Fraction(6, 5))
    assert linprog_max([1], A_ub=[[-1]], b_ub=[-1]).status == "unbounded"
    assert linprog_max([1], A_ub=[[1], [-1]], b_ub=[1, -2]).status == "infeasible"


def test_basic_feasible_solution_support():
    A = [[1, 1, 1, 1], [0, 3, 0, 1], [0, 0, 3, 1]]
    lam = basic_feasible_solution(A, [4, 4, 4])
    assert lam is not None and all(v >= 0 for v in lam)
    assert sum(1 for v in lam if v) <= 3
    for row, b in zip(A, [4, 4, 4]):
        assert sum(a * v for a, v in zip(row, lam)) == b
    assert basic_feasible_solution([[1, 1]], [-1]) is None


# -- boundary shell -----------------------------------------------------------


def test_shell_examples():
    assert boundary_shell_count(convex_hull([(0,), (10,)]), (0,), Fraction(1, 5)) == 2
    square = convex_hull(list(itertools.product((-2, 2), repeat=2)))
    assert boundary_shell_count(square, (0, 0), Fraction(1, 2)) == 16


def test_shell_small_gamma_limit():
    # C' = C exactly when C is a point; otherwise lattice points on faces missing x0
    # stay in the shell for every gamma > 0, so the count falls to that floor, not to 0
    point = convex_hull([(4, 4)])
    assert boundary_shell_count(point, (4, 4), Fraction(1, 10**6)) == 0
    seg = convex_hull([(0,), (100,)])
    counts = [boundary_shell_count(seg, (50,), Fraction(1, n)) for n in (2, 10, 1000)]
    assert counts == sorted(counts, reverse=True) and counts[-1] == 2


def test_shell_guards():
    hull = convex_hull([(0, 0), (1000, 0), (0, 1000)])
    with pytest.raises(errors.ResourceError):
        boundary_shell_count(hull, (1, 1), Fraction(1, 2), budget=10**5)
    with pytest.raises(errors.DomainError):
        boundary_shell_count(hull, (-1, 0), Fraction(1, 2))
    with pytest.raises(errors.DomainError):
        boundary_shell_count(hull, (1, 1), 1)


@pytest.mark.parametrize("d", [1, 2, 3])
@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_shell_matches_brute_force(d, data):
    pts = data.draw(pts_strategy(d))
    x0 = data.draw(st.sampled_from(pts))
    gamma = Fraction(data.draw(st.integers(1, 19)), 20)
    geomcheck.check_shell(pts, x0, gamma)


def test_shell_bound_on_large_hulls():
    # shell count <= eta vol(C) once C contains beta P with N large, for
    # eta > (1 + gamma)^d - (1 - 2 gamma)^d; checked on scaled simplices and boxes
    gamma = Fraction(1, 10)
    for d in (2, 3):
        eta = (1 + gamma) ** d - (1 - 2 * gamma) ** d
        for shape in ("box", "simplex"):
            n = 40 if d == 2 else 16
            if shape == "box":
                pts = list(itertools.product((-n, n), repeat=d))
                x0 = (0,) * d
            else:
                pts = [(0,) * d] + [tuple(n * (i == j) for j in range(d)) for i in range(d)]
                x0 = (n // (d + 1),) * d
            hull = convex_hull(pts)
            assert boundary_shell_count(hull, x0, gamma) <= eta * hull.volume


# -- regularization -----------------------------------------------------------


def test_regularize_full_box_small_eps():
    box = LatticeBox((10,))
    res = epsilon_regularize(box.points(), box, Fraction(1, 5))
    assert res.threshold == 1 and res.removed_count == 0 and len(res.kept) == 21
    box = LatticeBox((10, 10))
    res = epsilon_regularize(box.points(), box, Fraction(1, 5))
    assert res.threshold == Fraction(5 * 5, 5) and res.removed_count == 0


def test_regularize_singleton_and_empty():
    box = LatticeBox((10, 10))
    res = epsilon_regularize([(3, 3)], box, Fraction(1, 2))
    assert res.threshold > 1 and res.kept == () and res.removed_count == 1
    res = epsilon_regularize([], box, Fraction(1, 2))
    assert res.kept == () and res.removed_count == 0


def test_neighbourhood_counts_literal():
    box = LatticeBox((10,))
    A = [(0,), (1,), (2,), (7,)]
    counts = neighbourhood_counts(A, box, Fraction(1, 10))
    assert counts == {(0,): 2, (1,): 3, (2,): 2, (7,): 1}
    assert is_epsilon_regular(A, box, Fraction(1, 10))
    assert not is_epsilon_regular(A, box, Fraction(1, 2))


@pytest.mark.parametrize("d", [1, 2, 3])
@given(data=st.data())
@settings(max_examples=50, deadline=None)
def test_regularize_output_is_regular(d, data):
    box = LatticeBox(tuple(data.draw(st.integers(1, 6)) for _ in range(d)))
    pts = data.draw(st.lists(st.tuples(*[st.integers(-w, w) for w in box.half_widths]),
                             max_size=40))
    eps = Fraction(data.draw(st.integers(1, 99)), 100)
    res = geomcheck.check_regularize(sorted(set(pts)), box, eps)
    assert is_epsilon_regular(list(res.kept), box, eps)


def test_regularize_removal_bound_small_eps():
    rng = random.Random(5)
    for d in (1, 2):
        box = LatticeBox((60,) * d) if d == 1 else LatticeBox((30, 30))
        pts = sorted(set(geomcheck.random_points(rng, box, box.count // 2)))
        alpha = Fraction(len(pts), box.count)
        eta = Fraction(1, 2)
        eps = alpha * eta / Fraction(100) ** d / 2
        res = geomcheck.check_regularize(pts, box, eps, eta=eta)
        assert res.removed_count <= eta * len(pts)


# -- Shapley-Folkman ----------------------------------------------------------


def test_sf_interval_example():
    res = shapley_folkman_decompose([(0,), (1,)], 3, (Fraction(5, 2),))
    assert res.parts == ((1,), (1,)) and res.residual == (Fraction(1, 2),) and res.certified


def test_sf_constant_tuple():
    B = [(0, 0), (2, 1), (1, 3)]
    res = shapley_folkman_decompose(B, 5, (10, 5))
    assert res.parts == ((2, 1),) * 3 and res.residual == (4, 2)


def test_sf_triangle_example_against_exhaustive_oracle():
    B = [(0, 0), (3, 0), (0, 3)]
    res = geomcheck.check_sf(B, 4, (4, 4))
    hull = convex_hull(B)
    valid = [pair for pair in itertools.combinations_with_replacement(B, 2)
             if geomcheck.in_hull_scaled(hull, [4 - pair[0][0] - pair[1][0],
                                                4 - pair[0][1] - pair[1][1]], 2)]
    assert tuple(sorted(res.parts)) in valid


def test_sf_domain_errors():
    with pytest.raises(errors.DomainError):
        shapley_folkman_decompose([(0,), (1,)], 3, (4,))
    with pytest.raises(errors.DomainError):
        shapley_folkman_decompose([(0, 0), (1, 0), (0, 1)], 2, (1, 1))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sf_random_instances(d):
    rng = random.Random(20 + d)
    for _ in range(60):
        geomcheck.check_sf(*geomcheck.random_sf_instance(rng, d))


# -- popular Shapley-Folkman ----------------------------------------------------


def test_popular_sf_interval_window():
    box = LatticeBox((10,))
    A = [(i,) for i in range(11)]
    gamma, eps, k = Fraction(1, 11), Fraction(1, 50), 3
    x0, beta = (5,), Fraction(1, 2)
    lo_c = (1 - gamma) * 0 + gamma * 5
    hi_c = (1 - gamma) * 10 + gamma * 5
    for x in range(0, 45):
        r = popular_sf_density(A, box, gamma, eps, k, (x,), x0=x0, beta=beta)
        want = sum(1 for a in range(11) if x - k * hi_c <= a <= x - k * lo_c)
        assert r.count == want
        assert r.delta_measured == Fraction(want, 21)


def test_popular_sf_hypotheses_and_brute_force():
    box = LatticeBox((4, 4))
    A = box.points()
    r = popular_sf_density(A, box, Fraction(1, 5), Fraction(1, 10), 3, (0, 0))
    assert r.hypotheses_hold and r.count >= 1
    hull = convex_hull(A)
    brute = sum(1 for a in A if hull.contains((-a[0], -a[1]), scale=3, center=(0, 0),
                                              shrink=Fraction(1, 5)))
    assert r.count == brute
    far = popular_sf_density(A, box, Fraction(1, 5), Fraction(1, 10), 3, (100, 100))
    assert far.count == 0 and not far.hypotheses["x_in_(k+1)C'"]
