"""Random test objects shared by several test modules."""
from __future__ import annotations

import random
from fractions import Fraction

from birkhoff_kit.correspondence import Correspondence
from birkhoff_kit.exact_algebra import PolyRational, TruncatedSeries, multi_indices
from birkhoff_kit.linalg import det


def rand_q(rng: random.Random, size: int = 5) -> Fraction:
    return Fraction(rng.randint(-size, size), rng.randint(1, size))


def rand_poly(rng, num_vars: int, degree: int, density: float = 0.6, constant=True,
              size: int = 5) -> TruncatedSeries:
    coeffs = {}
    for k in range(0 if constant else 1, degree + 1):
        for index in multi_indices(num_vars, k):
            if rng.random() < density:
                coeffs[index] = rand_q(rng, size)
    return TruncatedSeries(num_vars, coeffs)


def rand_series(rng, num_vars: int, order: int, degree: int | None = None) -> TruncatedSeries:
    p = rand_poly(rng, num_vars, order if degree is None else degree)
    return p.with_order(order)


def rand_unit_denominator(rng, e: int) -> TruncatedSeries:
    """``1 + linear form`` (or ``1``), nonzero at the origin."""
    if rng.random() < 0.4:
        return TruncatedSeries.constant(1, e)
    return 1 + rand_poly(rng, e, 1, density=0.7, constant=False, size=3)


def rand_invertible(rng, e: int) -> list[list[Fraction]]:
    while True:
        m = [[rand_q(rng) for _ in range(e)] for _ in range(e)]
        if det(m) != 0:
            return m


def random_correspondence(rng, d: int, e: int, n: int) -> Correspondence:
    """Random n-correspondence regular at the origin with rational-function coefficients."""
    A = rand_invertible(rng, e)
    ys = [TruncatedSeries.variable(j, e) for j in range(e)]
    eqs = []
    for i in range(e):
        lin = sum((y.scale(a) for y, a in zip(ys, A[i])), TruncatedSeries.zero(e))
        a0 = lin + rand_poly(rng, e, 2, density=0.4, constant=False)
        terms = {(0,) * d: PolyRational(a0, rand_unit_denominator(rng, e))}
        for k in range(1, n + 1):
            for index in multi_indices(d, k):
                if rng.random() < 0.6:
                    num = rand_poly(rng, e, 2, density=0.4)
                    if num.is_zero():
                        continue
                    terms[index] = PolyRational(num, rand_unit_denominator(rng, e))
        eqs.append(terms)
    return Correspondence(d, e, n, tuple(eqs))
