"""n-correspondences: polynomial-in-x systems with rational coefficients in y.

An equation is stored as a mapping ``I -> a_I(y)`` with ``I`` a multi-index in
the ``d`` x-variables and ``a_I`` a :class:`PolyRational` in the ``e``
y-variables, so it reads ``f(x, y) = sum_I a_I(y) x^I``.  There are ``e``
equations, one per y-coordinate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Mapping, Sequence

from .errors import PoleError, TruncationError, ValidationError
from .exact_algebra import (
    PolyRational,
    Scalar,
    TruncatedSeries,
    parse_polynomial,
    poly_exact_div,
    poly_lcm,
    scalar,
)


def x_names(d: int) -> list[str]:
    return ["x"] if d == 1 else [f"x{i + 1}" for i in range(d)]


def y_names(e: int) -> list[str]:
    return ["y"] if e == 1 else [f"y{i + 1}" for i in range(e)]


def _as_rational(value, e: int) -> PolyRational:
    if isinstance(value, PolyRational):
        if value.num_vars != e:
            raise ValidationError(f"coefficient uses {value.num_vars} y-variables, expected {e}")
        return value
    if isinstance(value, TruncatedSeries):
        if value.num_vars != e:
            raise ValidationError(f"coefficient uses {value.num_vars} y-variables, expected {e}")
        return PolyRational(value.with_order(None))
    return PolyRational(value, None, e)


@dataclass(frozen=True, eq=False)
class Correspondence:
    """``e`` equations of x-degree at most ``degree``."""

    d: int
    e: int
    degree: int
    equations: tuple = field(repr=False)

    def __post_init__(self):
        if self.d < 0 or self.e < 1 or self.degree < 0:
            raise ValidationError("need d >= 0, e >= 1, degree >= 0")
        if len(self.equations) != self.e:
            raise ValidationError(f"expected {self.e} equations, got {len(self.equations)}")
        clean = []
        for eq in self.equations:
            terms = {}
            for index, coeff in dict(eq).items():
                index = tuple(int(i) for i in index)
                if len(index) != self.d or any(i < 0 for i in index):
                    raise ValidationError(f"bad x-exponent {index} for d={self.d}")
                if sum(index) > self.degree:
                    raise ValidationError(f"term x^{index} exceeds degree {self.degree}")
                r = _as_rational(coeff, self.e)
                if index in terms:
                    r = terms[index] + r
                if r.is_zero():
                    terms.pop(index, None)
                else:
                    terms[index] = r
            clean.append(terms)
        object.__setattr__(self, "equations", tuple(clean))

    def __eq__(self, other):
        if not isinstance(other, Correspondence):
            return NotImplemented
        if (self.d, self.e, self.degree) != (other.d, other.e, other.degree):
            return False
        for a, b in zip(self.equations, other.equations):
            if set(a) != set(b) or any(a[k] != b[k] for k in a):
                return False
        return True

    def with_degree(self, n: int) -> "Correspondence":
        """The same equations viewed as an n-correspondence (``n >= actual degree``)."""
        actual = max((sum(i) for eq in self.equations for i in eq), default=0)
        if n < actual:
            raise TruncationError(f"equations have x-degree {actual} > {n}")
        return Correspondence(self.d, self.e, n, self.equations)

    def denominators(self) -> list[TruncatedSeries]:
        return [r.denominator for eq in self.equations for r in eq.values()]

    def format(self) -> str:
        xs, ys = x_names(self.d), y_names(self.e)
        lines = []
        for k, eq in enumerate(self.equations):
            parts = []
            for index in sorted(eq, key=lambda i: (sum(i), i)):
                mono = "*".join(n if p == 1 else f"{n}^{p}" for n, p in zip(xs, index) if p)
                coeff = eq[index].format(ys)
                parts.append(f"({coeff})" + (f"*{mono}" if mono else ""))
            lines.append(f"f{k + 1} = " + (" + ".join(parts) if parts else "0"))
        return "\n".join(lines)

    def to_json(self) -> dict:
        ys = y_names(self.e)
        return {
            "d": self.d,
            "e": self.e,
            "degree": self.degree,
            "equations": [
                [{"exp": list(index), **eq[index].to_json(ys)}
                 for index in sorted(eq, key=lambda i: (sum(i), i))]
                for eq in self.equations
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "Correspondence":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if isinstance(obj, list):
            raw_eqs, d, e, degree = obj, None, None, None
        elif isinstance(obj, Mapping) and "equations" in obj:
            raw_eqs = obj["equations"]
            d, e, degree = obj.get("d"), obj.get("e"), obj.get("degree")
        else:
            raise ValidationError("correspondence JSON must be a list of equations "
                                  "or an object with 'equations'")
        if e is None:
            e = len(raw_eqs)
        eqs = []
        for raw in raw_eqs:
            terms = {}
            for t in raw:
                try:
                    index = tuple(t["exp"])
                    coeff = _coeff_from_json(t["num"], t.get("den"), e)
                except (KeyError, TypeError) as exc:
                    raise ValidationError(f"malformed correspondence term {t!r}") from exc
                if d is None:
                    d = len(index)
                terms[index] = terms[index] + coeff if index in terms else coeff
            eqs.append(terms)
        if d is None:
            raise ValidationError("cannot infer d from an empty correspondence")
        if degree is None:
            degree = max((sum(i) for eq in eqs for i in eq), default=0)
        return cls(d, e, degree, tuple(eqs))


def _coeff_from_json(num, den, e: int) -> PolyRational:
    """Coefficient from series JSON or from expression strings in ``y``/``y1..ye``."""
    if isinstance(num, str) or isinstance(den, str):
        names = y_names(e)
        parts = [parse_polynomial(str(v), names) if isinstance(v, (str, int)) else
                 TruncatedSeries.from_json(v).with_order(None) for v in (num, 1 if den is None else den)]
        return PolyRational(parts[0], parts[1])
    return PolyRational.from_json(num, den)


@dataclass(frozen=True)
class ClearedSystem:
    """Polynomials ``P_i(x, y) = D(y) f_i(x, y)`` with a common denominator ``D``."""

    d: int
    e: int
    polynomials: tuple
    denominator: TruncatedSeries

    def evaluate(self, x: Sequence, y: Sequence) -> list[Scalar]:
        den = self.denominator.evaluate(y)
        if den == 0:
            raise PoleError("common denominator vanishes")
        pt = list(x) + list(y)
        return [p.evaluate(pt) / den for p in self.polynomials]

    def to_json(self) -> dict:
        names = x_names(self.d) + y_names(self.e)
        return {
            "d": self.d,
            "e": self.e,
            "denominator": self.denominator.to_json(y_names(self.e)),
            "polynomials": [p.to_json(names) for p in self.polynomials],
        }


def poincare_system(n: int) -> Correspondence:
    """``f_n(x, y) = -y + sum_{k=1}^{n} x^k / (1 + k y)``."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    y = TruncatedSeries.variable(0, 1)
    terms = {(0,): PolyRational(-y)}
    for k in range(1, n + 1):
        terms[(k,)] = PolyRational(1, 1 + y.scale(k))
    return Correspondence(1, 1, n, (terms,))


def clear_denominators(c: Correspondence) -> ClearedSystem:
    """Multiply through by the least common multiple of all coefficient denominators."""
    nv = c.d + c.e
    dens = c.denominators() or [TruncatedSeries.constant(1, c.e)]
    D = poly_lcm(dens)
    polys = []
    for eq in c.equations:
        total = TruncatedSeries.zero(nv)
        for index, r in eq.items():
            cofactor = poly_exact_div(D, r.denominator)
            ypart = (r.numerator * cofactor).embed(nv, c.d)
            total = total + ypart * TruncatedSeries.monomial(tuple(index) + (0,) * c.e)
        polys.append(total)
    return ClearedSystem(c.d, c.e, tuple(polys), D)


def truncate_correspondence(c: Correspondence, m: int) -> Correspondence:
    """Drop every term with ``|I| > m``."""
    if m < 0:
        raise ValidationError("truncation degree must be non-negative")
    if m > c.degree:
        raise TruncationError(f"cannot truncate a {c.degree}-correspondence at degree {m}")
    eqs = tuple({i: r for i, r in eq.items() if sum(i) <= m} for eq in c.equations)
    return Correspondence(c.d, c.e, m, eqs)


def truncation_family(c: Correspondence) -> Callable[[int], Correspondence]:
    """The coherent family ``n -> f_n`` of truncations of ``c``."""

    def family(n: int) -> Correspondence:
        if n <= c.degree:
            return truncate_correspondence(c, n)
        return c.with_degree(n)

    return family


def _check_point(c: Correspondence, x: Sequence, y: Sequence):
    if len(x) != c.d or len(y) != c.e:
        raise ValidationError(f"point must have {c.d} x- and {c.e} y-coordinates")


def evaluate(c: Correspondence, x: Sequence, y: Sequence) -> list[Scalar]:
    """Exact value of ``f(x, y)``; raises :class:`PoleError` on a removed pole."""
    _check_point(c, x, y)
    xs = [scalar(v) for v in x]
    ys = [scalar(v) for v in y]
    out = []
    for eq in c.equations:
        total: Scalar = Fraction(0)
        for index, r in eq.items():
            mono: Scalar = Fraction(1)
            for v, p in zip(xs, index):
                if p:
                    mono = mono * v ** p
            total = total + r.evaluate(ys) * mono
        out.append(total)
    return out


def jacobian_y(c: Correspondence, x: Sequence, y: Sequence) -> list[list[Scalar]]:
    """Exact matrix ``(d f_i / d y_j)(x, y)``."""
    _check_point(c, x, y)
    xs = [scalar(v) for v in x]
    ys = [scalar(v) for v in y]
    rows = []
    for eq in c.equations:
        row = []
        for j in range(c.e):
            total: Scalar = Fraction(0)
            for index, r in eq.items():
                mono: Scalar = Fraction(1)
                for v, p in zip(xs, index):
                    if p:
                        mono = mono * v ** p
                total = total + r.derivative(j).evaluate(ys) * mono
            row.append(total)
        rows.append(row)
    return rows


def recenter(c: Correspondence, x0: Sequence, y0: Sequence) -> Correspondence:
    """The correspondence in coordinates centred at ``(x0, y0)``."""
    _check_point(c, x0, y0)
    xs = [scalar(v) for v in x0]
    ys = [scalar(v) for v in y0]
    shift_y = any(v != 0 for v in ys)
    shift_x = any(v != 0 for v in xs)
    eqs = []
    for eq in c.equations:
        terms: dict = {}
        for index, r in eq.items():
            r = r.shift(ys) if shift_y else r
            if not shift_x:
                terms[index] = terms[index] + r if index in terms else r
                continue
            for sub in _sub_indices(index):
                w: Scalar = Fraction(1)
                for i, j, a in zip(index, sub, xs):
                    w = w * comb(i, j) * a ** (i - j)
                if w == 0:
                    continue
                t = r * w
                terms[sub] = terms[sub] + t if sub in terms else t
        eqs.append(terms)
    return Correspondence(c.d, c.e, c.degree, tuple(eqs))


def _sub_indices(index: tuple):
    if not index:
        yield ()
        return
    for first in range(index[0] + 1):
        for rest in _sub_indices(index[1:]):
            yield (first,) + rest


def local_series(c: Correspondence, order: int) -> list[TruncatedSeries]:
    """Expansion of each equation at the origin as a series in ``(x, y)``."""
    nv = c.d + c.e
    out = []
    for eq in c.equations:
        total = TruncatedSeries.zero(nv, order)
        for index, r in eq.items():
            k = sum(index)
            if k > order:
                continue
            coeff = r.expand(order - k).embed(nv, c.d).with_order(order)
            mono = TruncatedSeries.monomial(tuple(index) + (0,) * c.e, 1, order)
            total = total + coeff * mono
        out.append(total)
    return out
