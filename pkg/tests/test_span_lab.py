import random
from fractions import Fraction

import pytest

from birkhoff_kit.birkhoff_solver import birkhoff_poly
from birkhoff_kit.correspondence import Correspondence, evaluate, poincare_system, truncation_family
from birkhoff_kit.errors import NotRegularError, TruncationError, ValidationError
from birkhoff_kit.exact_algebra import TruncatedSeries
from birkhoff_kit.span_lab import (
    AffineSubspace,
    affine_span,
    image_span_sample,
    jet_span_map,
    kms_certificate,
    relative_jet_span,
    span_chain,
    torsion_index,
)
from birkhoff_kit.verification import synthetic_family, torsion_example_map

from helpers import rand_q

x = TruncatedSeries.variable(0, 1)


def plane_y3_eq_y1_plus_y2():
    return AffineSubspace(3, [0, 0, 0], [[1, 0, 1], [0, 1, 1]])


def test_affine_span_examples():
    assert affine_span([(1, 0), (0, 1), (1, 1)]).is_full()
    p = affine_span([(Fraction(1, 2), 3)])
    assert p.dim == 0 and p.contains_point((Fraction(1, 2), 3))
    with pytest.raises(ValidationError):
        affine_span([])


def test_affine_span_recovers_plane():
    rng = random.Random(4)
    pts = []
    for _ in range(50):
        a, b = rand_q(rng), rand_q(rng)
        pts.append((a, b, a + b))
    s = affine_span(pts)
    assert s == plane_y3_eq_y1_plus_y2()
    assert s.equations() == [((1, 1, -1), 0)]


def test_canonical_equality():
    a = AffineSubspace(3, [1, 2, 3], [[2, 0, 2], [0, 1, 1]])
    b = AffineSubspace(3, [1, 3, 4], [[1, 1, 2], [0, 3, 3]])
    assert a == b and hash(a) == hash(b)
    assert a.translate([0, 0, 1]) != a


def test_containment():
    line = AffineSubspace(3, [0, 0, 0], [[1, 0, 1]])
    assert line <= plane_y3_eq_y1_plus_y2()
    assert not plane_y3_eq_y1_plus_y2() <= line


def test_subspace_json():
    s = AffineSubspace(2, [Fraction(1, 3), 0], [[1, Fraction(-2, 5)]])
    assert AffineSubspace.from_json(s.to_json()) == s


def test_torsion_example():
    chain = torsion_index(torsion_example_map(), None, 100)
    s = chain.spans
    assert chain.tau == 100
    assert chain.jumps() == [1, 3, 100]
    assert s[1] == s[2]
    assert all(s[3] == s[k] for k in range(3, 100))
    assert chain.is_monotone()
    assert chain.stable.describe() == "{y1 + y2 + y3 - y4 = 1}"
    # y4 = y1 + y2 + y3 - 1, not + 1
    assert chain.stable.contains_point((1, 0, 0, 0))
    assert not chain.stable.contains_point((0, 0, 0, 1))


def test_torsion_rescaled_example():
    g = [1 + x, x ** 3, x ** 10, x + x ** 3 + x ** 10]
    assert torsion_index(g, None, 10).tau == 10


def test_torsion_small_cases():
    b6 = birkhoff_poly(poincare_system(6), 7)
    ch = torsion_index(b6, None, 7)
    assert ch.tau == 1 and ch.stable.is_full()
    zero = [TruncatedSeries.zero(1), TruncatedSeries.zero(1)]
    ch = torsion_index(zero, None, 0)
    assert ch.tau == 0 and ch.stable == AffineSubspace(2, [0, 0])
    const = [TruncatedSeries.constant(3, 1)]
    assert jet_span_map(const, None, 4).dim == 0


def test_torsion_needs_enough_orders():
    with pytest.raises(TruncationError):
        torsion_index(torsion_example_map(), None, 50)


def test_affine_surjective_map():
    x1, x2 = TruncatedSeries.variable(0, 2), TruncatedSeries.variable(1, 2)
    ch = torsion_index([x1 + 1, x1 - x2], None, 1)
    assert ch.tau == 1 and ch.stable.is_full()


def test_jet_span_at_other_point():
    g = [x, x ** 2]
    assert jet_span_map(g, [Fraction(1, 2)], 0) == AffineSubspace(2, [Fraction(1, 2), Fraction(1, 4)])
    assert jet_span_map(g, [Fraction(1, 2)], 1) == AffineSubspace(2, [Fraction(1, 2), Fraction(1, 4)], [[1, 1]])


def test_raw_variant_differs_on_the_example():
    g = torsion_example_map()
    # the literal hull of {g(0), g'(0), g''(0)} includes the derivative vectors as points
    raw = jet_span_map(g, None, 1, raw=True)
    assert raw != jet_span_map(g, None, 1)


def test_factorial_scaling_invariance():
    g = [x + x ** 3, x ** 2 - x ** 3, x ** 3]
    for m in range(4):
        derivs = []
        comps = list(g)
        for _ in range(m):
            comps = [c.derivative(0) for c in comps]
            derivs.append([c.evaluate([0]) for c in comps])
        from_derivatives = AffineSubspace(3, [c.evaluate([0]) for c in g], derivs)
        assert from_derivatives == jet_span_map(g, None, m)


def test_relative_jet_span_examples():
    y3 = [TruncatedSeries.variable(j, 3) for j in range(3)]
    c = Correspondence(1, 3, 2, ({(0,): y3[0], (1,): -1}, {(0,): y3[1], (2,): -1},
                                 {(0,): y3[2], (1,): -1, (2,): -1}))
    assert relative_jet_span(c, None, 0) == AffineSubspace(3, [0, 0, 0])
    assert relative_jet_span(c, None, 2) == plane_y3_eq_y1_plus_y2()
    assert relative_jet_span(poincare_system(2), None, 1).is_full()


def test_relative_jet_span_off_origin():
    c = poincare_system(1)  # -y + x/(1+y): through (2, 1)
    f = relative_jet_span(c, [2, 1], 0)
    assert f == AffineSubspace(1, [1])
    assert relative_jet_span(c, [2, 1], 1).is_full()
    with pytest.raises(NotRegularError):
        relative_jet_span(c, [1, 1], 1)


def test_span_chain_examples():
    sc = span_chain(poincare_system, 4)
    assert sc.rho == 1 and sc.w_inf.is_full()
    sc = span_chain(synthetic_family, 5)
    assert sc.rho == 2 and sc.w_inf == plane_y3_eq_y1_plus_y2()
    assert [s.dim for s in sc.spans] == [0, 1, 2, 2, 2, 2]
    y = TruncatedSeries.variable(0, 1)
    flat = truncation_family(Correspondence(1, 1, 0, ({(0,): y},)))
    sc = span_chain(flat, 3)
    assert sc.rho == 0 and sc.w_inf == AffineSubspace(1, [0])


def test_kms_certificate_examples():
    assert kms_certificate(birkhoff_poly(poincare_system(9), 9), AffineSubspace(1, [0], [[1]])) == (1, True)
    b = birkhoff_poly(synthetic_family(4), 4)
    assert kms_certificate(b, plane_y3_eq_y1_plus_y2()) == (2, True)
    assert kms_certificate([x, x ** 2], AffineSubspace(3, [0, 0, 0], [[1, 0, 0], [0, 1, 0], [0, 0, 1]])).ok is False
    # target that does not contain the image
    assert kms_certificate(b, AffineSubspace(3, [0, 0, 0], [[1, 0, 0]])).ok is False


def test_image_span_examples():
    rng = random.Random(11)
    samples = [[rand_q(rng, 50)] for _ in range(200)]
    assert image_span_sample(torsion_example_map(), samples) == torsion_index(torsion_example_map(), None, 100).stable
    assert image_span_sample([TruncatedSeries.constant(2, 1)], samples[:5]).dim == 0
    assert image_span_sample([x, x ** 2, x + x ** 2], samples[:10]) == plane_y3_eq_y1_plus_y2()


def test_limit_containment_in_synthetic_family():
    # off W_inf the equations stay away from zero: f1 + f2 - f3 = -(y1 + y2 - y3)
    rng = random.Random(8)
    for _ in range(20):
        y = [rand_q(rng) for _ in range(3)]
        if y[0] + y[1] == y[2]:
            continue
        x0 = [rand_q(rng)]
        gap = abs(y[0] + y[1] - y[2])
        for n in range(2, 8):
            f = evaluate(synthetic_family(n), x0, y)
            assert max(abs(v) for v in f) >= gap / 3


def test_span_growth_counterexample_low_degree():
    # y1 = x and y2 = x*y1 is a 1-correspondence whose relative span keeps growing at order 2
    ys = [TruncatedSeries.variable(j, 2) for j in range(2)]
    c = Correspondence(1, 2, 1, ({(0,): ys[0], (1,): -1}, {(0,): ys[1], (1,): -ys[0]}))
    assert relative_jet_span(c, None, 1) == AffineSubspace(2, [0, 0], [[1, 0]])
    assert relative_jet_span(c, None, 2).is_full()


def test_finite_determinacy_for_graphs_affine_in_y():
    # equations y - a(x) with polynomial a of degree <= n: the span settles by order n
    rng = random.Random(21)
    for _ in range(20):
        e, n = rng.randint(1, 3), rng.randint(1, 4)
        ys = [TruncatedSeries.variable(j, e) for j in range(e)]
        eqs = []
        for j in range(e):
            terms = {(0,): ys[j]}
            for k in range(1, n + 1):
                if rng.random() < 0.6:
                    terms[(k,)] = rand_q(rng)
            eqs.append(terms)
        c = Correspondence(1, e, n, tuple(eqs))
        spans = [relative_jet_span(c, None, m) for m in (n, n + 1, n + 2)]
        assert spans[0] == spans[1] == spans[2]
