import random
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from birkhoff_kit.correspondence import poincare_system
from birkhoff_kit.domain_geometry import (
    PoleDiskDomain,
    ResonanceTubeDomain,
    cauchy_derivative_bound,
    convergence_report,
    diophantine_margin,
    lattice_vectors,
    pole_membership,
    tail_bound,
    term_bound,
    tube_membership,
)
from birkhoff_kit.errors import ValidationError
from birkhoff_kit.exact_algebra import ExactScalar, abs2

from helpers import rand_q

HALF, THREE_Q = Fraction(1, 2), Fraction(3, 4)


def brute_pole(dom, x, y):
    if abs2(x) > Fraction(dom.rho) ** 2 or abs2(y) > Fraction(dom.eta) ** 2:
        return False
    return all(abs2(y + Fraction(1, k)) >= Fraction(1, k ** 6) for k in range(1, dom.n + 1))


def rand_gauss(rng, size=40):
    return ExactScalar(rand_q(rng, size), rand_q(rng, size))


def test_pole_membership_examples():
    assert pole_membership(PoleDiskDomain(HALF, THREE_Q, 3, 10), 0, 0)
    for n in (2, 5, 50):
        assert not pole_membership(PoleDiskDomain(HALF, THREE_Q, 3, n), 0, Fraction(-1, 2))
    dom = PoleDiskDomain(HALF, THREE_Q, 3, 10)
    y = Fraction(-1, 2) + Fraction(1, 4)
    assert pole_membership(dom, 0, y) == brute_pole(dom, 0, y)


def test_pole_membership_matches_brute_force():
    rng = random.Random(1)
    for _ in range(400):
        n = rng.randint(0, 30)
        dom = PoleDiskDomain(HALF, Fraction(3, 2), 3, n)
        x = rand_gauss(rng, 6) / 8
        y = rand_gauss(rng) / 30
        assert pole_membership(dom, x, y) == brute_pole(dom, x, y)


def test_pole_membership_near_boundary_exact():
    dom = PoleDiskDomain(HALF, 1, 3, 3)
    # exactly on the circle |y + 1| = 1
    on = ExactScalar(Fraction(-2, 5), Fraction(4, 5))
    assert pole_membership(dom, 0, on)
    assert not pole_membership(dom, 0, on - Fraction(1, 10 ** 30))
    assert not pole_membership(dom, 0, complex(-0.4, 0.8))


def test_x_chain_is_decreasing():
    rng = random.Random(2)
    for _ in range(300):
        y = rand_gauss(rng) / 20
        flags = [pole_membership(PoleDiskDomain(HALF, 1, 3, n), 0, y) for n in range(0, 25)]
        assert all(a or not b for a, b in zip(flags, flags[1:]))


def test_origin_survives_all_removals():
    assert all(Fraction(1, k) >= Fraction(1, k ** 3) for k in range(1, 10 ** 4 + 1))
    assert pole_membership(PoleDiskDomain(HALF, THREE_Q, 3, 10 ** 4), 0, 0)
    assert pole_membership(PoleDiskDomain(HALF, THREE_Q, 3, None), 0, 0)


def test_domain_validation():
    with pytest.raises(ValidationError):
        PoleDiskDomain(1, 1, 3)
    with pytest.raises(ValidationError):
        PoleDiskDomain(HALF, 1, 2)


def test_term_bound():
    assert term_bound(1, HALF, 3) == HALF
    assert term_bound(3, 0, 3) == 0
    assert term_bound(4, HALF, 3) == 1


def test_tail_bound_closed_form():
    tb = tail_bound(0, HALF, 3)
    x = HALF
    assert x * (1 + x) / (1 - x) ** 3 == 6
    assert 6 <= tb <= 6 + 1e-6
    assert tail_bound(5, 0, 3) == 0
    with pytest.raises(ValidationError):
        tail_bound(0, 1, 3)


def test_tail_bound_is_monotone_and_certified():
    vals = [tail_bound(n, HALF, 3) for n in range(52)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    for n in (0, 3, 10, 30):
        exact = sum(Fraction(k * k, 2 ** k) for k in range(n + 1, 400))
        assert vals[n] >= exact


def test_tail_bound_non_integer_exponent():
    exact = sum(k ** 1.5 * 0.3 ** k for k in range(3, 2000))
    assert exact <= tail_bound(2, 0.3, 2.5) <= exact * (1 + 1e-9)


def test_tail_bound_certifies_partial_sums_on_samples():
    rng = random.Random(5)
    m, n = 5, 15
    dom = PoleDiskDomain(HALF, THREE_Q, 3, n)
    bound = tail_bound(m, HALF, 3)
    checked = 0
    while checked < 20:
        x = ExactScalar(rand_q(rng, 20), rand_q(rng, 20)) / 4
        y = rand_gauss(rng) / 60
        if not pole_membership(dom, x, y):
            continue
        s = sum((x ** k / (1 + k * y) for k in range(m + 1, n + 1)), Fraction(0))
        assert abs2(s) <= Fraction(bound) ** 2
        checked += 1


def test_cauchy_bound():
    assert cauchy_derivative_bound(0, 0, 1, 1, 7) == 7
    assert cauchy_derivative_bound(1, 0, 1, HALF, 1) == 2
    assert cauchy_derivative_bound(0, 1, Fraction(1, 8), 1, 1) == 16


# tubes -------------------------------------------------------------------------

def brute_tube(dom, y):
    for a in product(range(-dom.n, dom.n + 1), repeat=dom.e):
        if not any(a):
            continue
        norm = max(abs(v) for v in a)
        delta2 = Fraction(dom.delta_c) ** 2 / Fraction(norm) ** (2 * int(dom.delta_gamma))
        if abs2(sum((v * w for v, w in zip(y, a)), Fraction(0))) < delta2:
            return False
    return True


def test_sign_reduced_lattice():
    assert len(lattice_vectors(2, 3)) == 24
    assert len(lattice_vectors(2, 3, sign_reduced=False)) == 48


def test_tube_examples():
    y = (1, Fraction(3, 2))
    for n in (3, 4):
        assert not tube_membership(ResonanceTubeDomain(2, n, Fraction(1, 10), 3), y)
    assert diophantine_margin(ResonanceTubeDomain(2, 3, Fraction(1, 10), 3), y) == 0
    assert tube_membership(ResonanceTubeDomain(2, 4, 0, 3), y)
    dom = ResonanceTubeDomain(2, 3, 1, 3)
    z = (1, ExactScalar(HALF, 1))
    assert tube_membership(dom, z) == brute_tube(dom, z)


def test_margin_consistency_and_monotonicity():
    rng = random.Random(7)
    for _ in range(100):
        y = [rand_gauss(rng, 20) for _ in range(2)]
        dom = ResonanceTubeDomain(2, 3, Fraction(1, 4), 2)
        assert (diophantine_margin(dom, y) >= 1) == tube_membership(dom, y)
        margins = [diophantine_margin(ResonanceTubeDomain(2, n, Fraction(1, 4), 2), y)
                   for n in range(1, 5)]
        assert all(b <= a for a, b in zip(margins, margins[1:]))


def test_float_membership_is_conservative():
    dom = ResonanceTubeDomain(2, 2, Fraction(1, 10), 3)
    # (y, (1, 0)) = 1/10 exactly on the boundary: exact input is a member
    assert tube_membership(dom, (Fraction(1, 10), Fraction(7, 3)))
    # the float path never reports a boundary point as a member
    assert not tube_membership(dom, (0.1 * (1 - 1e-15), 7 / 3))


# convergence -------------------------------------------------------------------

def test_convergence_report():
    rep = convergence_report(poincare_system, PoleDiskDomain(HALF, THREE_Q, 3), 50, 5, 15)
    assert rep.verdict and rep.sampled_sup > 0
    same = convergence_report(poincare_system, PoleDiskDomain(HALF, THREE_Q, 3), 20, 6, 6)
    assert same.sampled_sup == 0
    big = convergence_report(poincare_system, PoleDiskDomain(Fraction(9, 10), THREE_Q, 3), 20, 5, 15)
    small = convergence_report(poincare_system, PoleDiskDomain(Fraction(1, 10), THREE_Q, 3), 20, 5, 15)
    assert small.analytic_bound * 1e4 < big.analytic_bound
    with pytest.raises(ValidationError):
        convergence_report(poincare_system, PoleDiskDomain(HALF, THREE_Q, 3), 20, 7, 5)


def test_float_pole_path_agrees_on_grid():
    dom = PoleDiskDomain(HALF, THREE_Q, 3, 12)
    t = np.linspace(-0.75, 0.75, 31)
    for a in t:
        for b in t:
            y = complex(a, b)
            exact = brute_pole(dom, 0, ExactScalar(Fraction(float(a)), Fraction(float(b))))
            if pole_membership(dom, 0, y):
                assert exact
