import math
import random
from fractions import Fraction

import pytest

from birkhoff_kit.birkhoff_solver import (
    BirkhoffPolynomial,
    birkhoff_limit,
    birkhoff_poly,
    newton_iterates,
    undetermined_coefficients_oracle,
    verify_solution,
)
from birkhoff_kit.correspondence import (
    Correspondence,
    clear_denominators,
    poincare_system,
)
from birkhoff_kit.errors import (
    IncoherentFamilyError,
    NotRegularError,
    SingularJacobianError,
)
from birkhoff_kit.exact_algebra import TruncatedSeries, series_substitute

from helpers import rand_invertible, random_correspondence

y = TruncatedSeries.variable(0, 1)


def coeffs(b):
    return b.coefficients()


def test_trivial_linear():
    c = Correspondence(1, 1, 1, ({(0,): -y, (1,): 1},))
    assert coeffs(birkhoff_poly(c, 5)) == [0, 1, 0, 0, 0, 0]


@pytest.mark.parametrize("n, want", [
    (3, [0, 1, 0, 0, 0, 2, -14, 64]),
    (4, [0, 1, 0, 0, 1, -3, 7, -19]),
    (6, [0, 1, 0, 0, 1, -2, 2, 5]),
])
def test_poincare_jets(n, want):
    assert coeffs(birkhoff_poly(poincare_system(n), 7)) == want


def test_limit_low_order():
    assert coeffs(birkhoff_limit(poincare_system, 3)) == [0, 1, 0, 0]


def test_limit_of_constant_family():
    c = Correspondence(1, 1, 2, ({(0,): y - y ** 2, (1,): -1},))
    fam = lambda n: c.with_degree(max(n, 2)) if n >= 2 else Correspondence(
        1, 1, n, ({k: v for k, v in c.equations[0].items() if k[0] <= n},))
    assert birkhoff_limit(fam, 6) == birkhoff_poly(c.with_degree(6), 6)


def test_incoherent_family():
    fam = lambda n: poincare_system(n) if n != 2 else poincare_system(1).with_degree(2)
    with pytest.raises(IncoherentFamilyError):
        birkhoff_limit(fam, 4)


def test_catalan():
    c = Correspondence(1, 1, 1, ({(0,): y - y ** 2, (1,): -1},))
    assert coeffs(undetermined_coefficients_oracle(c, 4)) == [0, 1, 1, 2, 5]
    assert coeffs(birkhoff_poly(c, 4)) == [0, 1, 1, 2, 5]


def test_linear_system():
    rng = random.Random(2)
    A = rand_invertible(rng, 3)
    B = [[Fraction(rng.randint(-4, 4)) for _ in range(2)] for _ in range(3)]
    ys = [TruncatedSeries.variable(j, 3) for j in range(3)]
    eqs = []
    for i in range(3):
        terms = {(0, 0): sum((yj.scale(a) for yj, a in zip(ys, A[i])), TruncatedSeries.zero(3))}
        for k in range(2):
            idx = (1, 0) if k == 0 else (0, 1)
            if B[i][k]:
                terms[idx] = -B[i][k]
        eqs.append(terms)
    b = birkhoff_poly(Correspondence(2, 3, 1, tuple(eqs)), 3)
    from birkhoff_kit.linalg import inverse
    Ainv = inverse(A)
    for j in range(3):
        for k, idx in enumerate([(1, 0), (0, 1)]):
            want = sum((Ainv[j][i] * B[i][k] for i in range(3)), Fraction(0))
            assert b.components[j].coefficient(idx) == want
        assert b.components[j].degree() <= 1


@pytest.mark.parametrize("n", range(10))
def test_newton_matches_oracle_on_poincare(n):
    N = 9
    assert birkhoff_poly(poincare_system(n), N) == undetermined_coefficients_oracle(poincare_system(n), N)


@pytest.mark.parametrize("seed", range(8))
def test_newton_matches_oracle_on_random_systems(seed):
    rng = random.Random(seed)
    c = random_correspondence(rng, rng.randint(1, 2), rng.randint(1, 3), rng.randint(1, 3))
    assert birkhoff_poly(c, 4) == undetermined_coefficients_oracle(c, 4)


def test_family_consistency():
    for n in range(11):
        a = birkhoff_poly(poincare_system(n + 1), n)
        assert a == birkhoff_poly(poincare_system(n), n)


def test_truncation_of_jet_matches_truncated_system():
    for k in range(1, 6):
        full = birkhoff_poly(poincare_system(8), 8).truncate(k)
        assert full == birkhoff_poly(poincare_system(k), k)


def test_newton_doubles_precision():
    c = poincare_system(6)
    N = 12
    cleared = clear_denominators(c)
    for s, b in enumerate(newton_iterates(c, N)):
        x = TruncatedSeries.variable(0, 1)
        res = series_substitute(cleared.polynomials[0], [x, b[0].with_order(None)])
        assert min(res.truncate(N).valuation(), N + 1) - 1 >= min(N, 2 ** s)


def test_verify_solution():
    c = poincare_system(4)
    b = birkhoff_poly(c, 7)
    assert verify_solution(c, b) >= 7
    lin = Correspondence(1, 1, 1, ({(0,): -y, (1,): 1},))
    assert verify_solution(lin, birkhoff_poly(lin, 3)) == math.inf


def test_verify_solution_fault_injection():
    c = poincare_system(4)
    b = birkhoff_poly(c, 7)
    bad = b.components[0] + TruncatedSeries.monomial((6,), 1, 7)
    # the residual gains a degree-6 term, so no term of degree <= 5 survives but degree 6 does
    assert verify_solution(c, BirkhoffPolynomial(1, 1, 7, (bad,))) == 5


def test_singular_jacobian():
    c = Correspondence(1, 1, 1, ({(0,): y ** 2, (1,): 1},))
    with pytest.raises(SingularJacobianError, match="maximal rank"):
        birkhoff_poly(c, 3)
    with pytest.raises(SingularJacobianError):
        undetermined_coefficients_oracle(c, 3)


def test_not_through_origin():
    c = Correspondence(1, 1, 1, ({(0,): y + 1, (1,): 1},))
    with pytest.raises(NotRegularError):
        birkhoff_poly(c, 3)


def test_json_roundtrip():
    b = birkhoff_poly(poincare_system(5), 7)
    assert BirkhoffPolynomial.from_json(b.to_json()) == b
    assert b.format() == "b(x) = x + x^4 - 2*x^5 + x^6 + 12*x^7 + O(8)"
