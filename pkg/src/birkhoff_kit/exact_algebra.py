"""Exact coefficient field and truncated multivariate series arithmetic.

Coefficients are Gaussian rationals.  A purely real value is always stored
as a plain :class:`fractions.Fraction`; :class:`ExactScalar` only appears
when the imaginary part is nonzero.  This keeps the common real case fast
while structural equality still equals mathematical equality.

A :class:`TruncatedSeries` with ``order=None`` is an exact polynomial; with
an integer order ``N`` it is a power series known up to total degree ``N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ComputationError, PoleError, ValidationError

MultiIndex = tuple


class ExactScalar:
    """Gaussian rational ``re + i*im`` with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def _make(cls, re: Fraction, im: Fraction):
        if im == 0:
            return re
        obj = cls.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    def __add__(self, other):
        if isinstance(other, ExactScalar):
            return ExactScalar._make(self.re + other.re, self.im + other.im)
        if isinstance(other, (int, Fraction)):
            return ExactScalar._make(self.re + other, self.im)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar._make(-self.re, -self.im)

    def __sub__(self, other):
        if isinstance(other, ExactScalar):
            return ExactScalar._make(self.re - other.re, self.im - other.im)
        if isinstance(other, (int, Fraction)):
            return ExactScalar._make(self.re - other, self.im)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactScalar._make(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, ExactScalar):
            return ExactScalar._make(self.re * other.re - self.im * other.im,
                                     self.re * other.im + self.im * other.re)
        if isinstance(other, (int, Fraction)):
            return ExactScalar._make(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def conjugate(self):
        return ExactScalar._make(self.re, -self.im)

    def __truediv__(self, other):
        if isinstance(other, ExactScalar):
            n = other.abs2()
            num = self * other.conjugate()
            return ExactScalar._make(_re(num) / n, _im(num) / n)
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return ExactScalar._make(self.re / other, self.im / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            n = self.abs2()
            return ExactScalar._make(other * self.re / n, -other * self.im / n)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return 1 / (self ** -k)
        result: Union[Fraction, ExactScalar] = Fraction(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, ExactScalar):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, complex):
            return complex(self) == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return math.hypot(float(self.re), float(self.im))

    def __repr__(self):
        return f"ExactScalar({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self):
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


Scalar = Union[Fraction, ExactScalar]


def scalar(value) -> Scalar:
    """Coerce ``value`` to the canonical exact representation.

    Floats and complex numbers are converted exactly (binary value); strings
    accept anything :class:`Fraction` parses, plus ``"a+bj"`` style complex.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, ExactScalar):
        return value.re if value.im == 0 else value
    if isinstance(value, bool):
        raise ValidationError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite scalar {value!r}")
        return Fraction(value)
    if isinstance(value, complex):
        return ExactScalar._make(Fraction(value.real), Fraction(value.imag))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError:
            pass
        return _parse_gaussian(value)
    if isinstance(value, (np.integer,)):
        return Fraction(int(value))
    if isinstance(value, (np.floating,)):
        return Fraction(float(value))
    raise ValidationError(f"unsupported scalar type {type(value).__name__}")


def _parse_gaussian(text: str) -> Scalar:
    s = text.replace(" ", "")
    if not s or s[-1] not in "ij":
        raise ValidationError(f"cannot parse scalar {text!r}")
    body = s[:-1]
    split = max(body.rfind("+"), body.rfind("-"))
    re_txt, im_txt = (body[:split], body[split:]) if split > 0 else ("0", body)
    if im_txt in ("", "+", "-"):
        im_txt += "1"
    try:
        return ExactScalar._make(Fraction(re_txt), Fraction(im_txt))
    except ValueError:
        raise ValidationError(f"cannot parse scalar {text!r}") from None


def _re(z) -> Fraction:
    return z.re if isinstance(z, ExactScalar) else Fraction(z)


def _im(z) -> Fraction:
    return z.im if isinstance(z, ExactScalar) else Fraction(0)


def abs2(z) -> Fraction:
    """Exact squared modulus."""
    if isinstance(z, ExactScalar):
        return z.abs2()
    return Fraction(z) * Fraction(z)


def conj(z):
    return z.conjugate() if isinstance(z, ExactScalar) else z


def to_complex(z) -> complex:
    return complex(z) if isinstance(z, ExactScalar) else complex(float(z))


def _rational_to_json(q: Fraction) -> list[str]:
    return [str(q.numerator), str(q.denominator)]


def _rational_from_json(obj) -> Fraction:
    if isinstance(obj, (list, tuple)):
        if len(obj) != 2:
            raise ValidationError(f"rational must be [num, den], got {obj!r}")
        return Fraction(int(obj[0]), int(obj[1]))
    if isinstance(obj, (str, int)):
        return Fraction(obj)
    raise ValidationError(f"cannot read rational from {obj!r}")


def scalar_to_json(z) -> dict:
    return {"re": _rational_to_json(_re(z)), "im": _rational_to_json(_im(z))}


def scalar_from_json(obj) -> Scalar:
    if isinstance(obj, dict):
        return ExactScalar._make(_rational_from_json(obj.get("re", "0")),
                                 _rational_from_json(obj.get("im", "0")))
    return scalar(obj)


def _add_index(a: tuple, b: tuple) -> tuple:
    return tuple(i + j for i, j in zip(a, b))


def _min_order(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class TruncatedSeries:
    """Sparse multivariate series truncated at a total degree.

    ``order=None`` marks an exact polynomial.  Instances are immutable.
    """

    __slots__ = ("num_vars", "order", "_coeffs", "_by_degree")

    def __init__(self, num_vars: int, coeffs: Mapping | None = None, order: int | None = None):
        if num_vars < 0:
            raise ValidationError("num_vars must be non-negative")
        if order is not None and order < 0:
            raise ValidationError("order must be non-negative")
        clean = {}
        for index, value in (coeffs or {}).items():
            index = tuple(int(i) for i in index)
            if len(index) != num_vars or any(i < 0 for i in index):
                raise ValidationError(f"bad multi-index {index} for {num_vars} variables")
            if order is not None and sum(index) > order:
                continue
            c = scalar(value)
            if c != 0:
                clean[index] = clean.get(index, 0) + c
                if clean[index] == 0:
                    del clean[index]
        self.num_vars = num_vars
        self.order = order
        self._coeffs = clean
        self._by_degree = None

    @classmethod
    def _raw(cls, num_vars: int, order, coeffs: dict) -> "TruncatedSeries":
        obj = cls.__new__(cls)
        obj.num_vars = num_vars
        obj.order = order
        obj._coeffs = coeffs
        obj._by_degree = None
        return obj

    # constructors
    @classmethod
    def zero(cls, num_vars: int, order: int | None = None) -> "TruncatedSeries":
        return cls._raw(num_vars, order, {})

    @classmethod
    def constant(cls, value, num_vars: int, order: int | None = None) -> "TruncatedSeries":
        return cls(num_vars, {(0,) * num_vars: value}, order)

    @classmethod
    def variable(cls, i: int, num_vars: int, order: int | None = None) -> "TruncatedSeries":
        index = [0] * num_vars
        index[i] = 1
        return cls(num_vars, {tuple(index): 1}, order)

    @classmethod
    def monomial(cls, index: Sequence[int], coeff=1, order: int | None = None) -> "TruncatedSeries":
        return cls(len(index), {tuple(index): coeff}, order)

    # inspection
    def items(self):
        return self._coeffs.items()

    def coefficient(self, index: Sequence[int]) -> Scalar:
        return self._coeffs.get(tuple(index), Fraction(0))

    def constant_term(self) -> Scalar:
        return self.coefficient((0,) * self.num_vars)

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_polynomial(self) -> bool:
        return self.order is None

    def degree(self) -> int:
        """Largest total degree present, ``-1`` for the zero series."""
        return max((sum(i) for i in self._coeffs), default=-1)

    def degree_in(self, var: int) -> int:
        return max((i[var] for i in self._coeffs), default=-1)

    def valuation(self):
        """Smallest total degree present, ``math.inf`` for zero."""
        return min((sum(i) for i in self._coeffs), default=math.inf)

    def homogeneous_part(self, k: int) -> "TruncatedSeries":
        return TruncatedSeries._raw(self.num_vars, None,
                                    {i: c for i, c in self._coeffs.items() if sum(i) == k})

    def _sorted_terms(self):
        if self._by_degree is None:
            self._by_degree = sorted(((sum(i), i, c) for i, c in self._coeffs.items()),
                                     key=lambda t: (t[0], t[1]))
        return self._by_degree

    def __len__(self):
        return len(self._coeffs)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self.num_vars == other.num_vars and self.order == other.order
                and self._coeffs == other._coeffs)

    def __hash__(self):
        return hash((self.num_vars, self.order, frozenset(self._coeffs.items())))

    def same_jet(self, other: "TruncatedSeries", order: int) -> bool:
        """Equality of the two series up to total degree ``order``."""
        return self.truncate(order)._coeffs == other.truncate(order)._coeffs

    # arithmetic
    def _check(self, other: "TruncatedSeries"):
        if self.num_vars != other.num_vars:
            raise ValidationError(
                f"variable-count mismatch: {self.num_vars} vs {other.num_vars}")

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return other
        return TruncatedSeries.constant(other, self.num_vars)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except ValidationError:
            if isinstance(other, TruncatedSeries):
                raise
            return NotImplemented
        order = _min_order(self.order, other.order)
        out = dict(self._coeffs)
        for i, c in other._coeffs.items():
            v = out.get(i, 0) + c
            if v == 0:
                out.pop(i, None)
            else:
                out[i] = v
        if order is not None:
            out = {i: c for i, c in out.items() if sum(i) <= order}
        return TruncatedSeries._raw(self.num_vars, order, out)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries._raw(self.num_vars, self.order,
                                    {i: -c for i, c in self._coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, TruncatedSeries):
            return self + (-other)
        return self + (-scalar(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TruncatedSeries":
        c = scalar(c)
        if c == 0:
            return TruncatedSeries._raw(self.num_vars, self.order, {})
        return TruncatedSeries._raw(self.num_vars, self.order,
                                    {i: v * c for i, v in self._coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            try:
                return self.scale(other)
            except ValidationError:
                return NotImplemented
        self._check(other)
        order = _min_order(self.order, other.order)
        out: dict = {}
        right = other._sorted_terms()
        for da, ia, ca in self._sorted_terms():
            if order is not None and da > order:
                break
            for db, ib, cb in right:
                if order is not None and da + db > order:
                    break
                k = _add_index(ia, ib)
                out[k] = out.get(k, 0) + ca * cb
        return TruncatedSeries._raw(self.num_vars, order,
                                    {i: c for i, c in out.items() if c != 0})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = TruncatedSeries.constant(1, self.num_vars, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def truncate(self, order: int) -> "TruncatedSeries":
        new = _min_order(self.order, order)
        return TruncatedSeries._raw(self.num_vars, new,
                                    {i: c for i, c in self._coeffs.items() if sum(i) <= new})

    def with_order(self, order: int | None) -> "TruncatedSeries":
        """Reinterpret the coefficients with another order (drops terms above it)."""
        if order is None:
            return TruncatedSeries._raw(self.num_vars, None, dict(self._coeffs))
        return TruncatedSeries._raw(self.num_vars, order,
                                    {i: c for i, c in self._coeffs.items() if sum(i) <= order})

    def derivative(self, var: int) -> "TruncatedSeries":
        if self.order == 0:
            raise ComputationError("derivative of an order-0 series carries no information")
        out = {}
        for i, c in self._coeffs.items():
            if i[var]:
                j = list(i)
                j[var] -= 1
                out[tuple(j)] = c * i[var]
        order = None if self.order is None else self.order - 1
        return TruncatedSeries._raw(self.num_vars, order, out)

    def embed(self, num_vars: int, offset: int) -> "TruncatedSeries":
        """View as a series in ``num_vars`` variables, own variables starting at ``offset``."""
        if offset + self.num_vars > num_vars:
            raise ValidationError("embedding does not fit")
        pad_l = (0,) * offset
        pad_r = (0,) * (num_vars - offset - self.num_vars)
        return TruncatedSeries._raw(num_vars, self.order,
                                    {pad_l + i + pad_r: c for i, c in self._coeffs.items()})

    def evaluate(self, point: Sequence) -> Scalar:
        if len(point) != self.num_vars:
            raise ValidationError(f"expected {self.num_vars} coordinates, got {len(point)}")
        pt = [scalar(p) for p in point]
        powers: list[dict] = [{0: Fraction(1)} for _ in pt]
        total: Scalar = Fraction(0)
        for index, c in self._coeffs.items():
            term = c
            for v, e in enumerate(index):
                if e:
                    cache = powers[v]
                    if e not in cache:
                        cache[e] = pt[v] ** e
                    term = term * cache[e]
            total = total + term
        return total

    def evaluate_numeric(self, *coords):
        """Vectorised complex evaluation; ``coords`` are broadcastable arrays."""
        if len(coords) != self.num_vars:
            raise ValidationError(f"expected {self.num_vars} coordinate arrays")
        arrays = [np.asarray(c, dtype=complex) for c in coords]
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        total = np.zeros(shape, dtype=complex)
        for index, c in self._coeffs.items():
            term = np.full(shape, to_complex(c), dtype=complex)
            for a, e in zip(arrays, index):
                if e:
                    term = term * a ** e
            total = total + term
        return total

    def substitute(self, gs: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        return series_substitute(self, gs)

    def invert_unit(self, order: int | None = None) -> "TruncatedSeries":
        return series_invert_unit(self, order)

    # formatting / serialization
    def format(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names else default_names(self.num_vars)
        if not self._coeffs:
            return "0"
        parts = []
        for deg, index, c in self._sorted_terms():
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(names, index) if e)
            if isinstance(c, ExactScalar):
                coef = f"({c})"
                neg = False
            else:
                neg = c < 0
                coef = str(abs(c))
            if mono:
                body = mono if coef == "1" else f"{coef}*{mono}"
            else:
                body = coef
            parts.append(("- " if neg else "+ ") + body)
        text = " ".join(parts)
        text = text[2:] if text.startswith("+ ") else "-" + text[2:]
        if self.order is not None:
            text += f" + O({self.order + 1})"
        return text

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"TruncatedSeries({self.num_vars}, order={self.order}, {self.format()!r})"

    def to_json(self, names: Sequence[str] | None = None) -> dict:
        names = list(names) if names else default_names(self.num_vars)
        return {
            "vars": names,
            "order": self.order,
            "terms": [{"exp": list(index), **scalar_to_json(c)}
                      for _, index, c in self._sorted_terms()],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TruncatedSeries":
        try:
            names = obj["vars"]
            terms = obj.get("terms", [])
            order = obj.get("order")
        except (KeyError, TypeError, AttributeError):
            raise ValidationError("series JSON needs 'vars' and 'terms'") from None
        coeffs: dict = {}
        for t in terms:
            index = tuple(t["exp"])
            coeffs[index] = coeffs.get(index, 0) + scalar_from_json(t)
        return cls(len(names), coeffs, order)


def default_names(n: int) -> list[str]:
    if n == 1:
        return ["x"]
    if n == 2:
        return ["x", "y"]
    return [f"x{i + 1}" for i in range(n)]


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    if not isinstance(a, TruncatedSeries) or not isinstance(b, TruncatedSeries):
        raise ValidationError("series_mul expects two TruncatedSeries")
    return a * b


def series_substitute(f: TruncatedSeries, gs: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """Compose ``f(g_1, ..., g_k)``.

    Allowed when every ``g_i`` has zero constant term, or when ``f`` is an
    exact polynomial (then constants are harmless).
    """
    gs = list(gs)
    if len(gs) != f.num_vars:
        raise ValidationError(f"arity mismatch: f has {f.num_vars} variables, got {len(gs)}")
    if not gs:
        return TruncatedSeries.constant(f.constant_term(), 0, f.order)
    m = gs[0].num_vars
    for g in gs:
        if g.num_vars != m:
            raise ValidationError("substituted series must share one variable set")
    nilpotent = all(g.constant_term() == 0 for g in gs)
    if f.order is not None and not nilpotent:
        raise ComputationError("non-nilpotent substitution into a truncated series")
    order = None
    for g in gs:
        order = _min_order(order, g.order)
    if f.order is not None:
        order = _min_order(order, f.order)
    one = TruncatedSeries.constant(1, m, order)
    powers = [[one] for _ in gs]

    def power(v: int, e: int) -> TruncatedSeries:
        cache = powers[v]
        while len(cache) <= e:
            cache.append((cache[-1] * gs[v]) if order is None else (cache[-1] * gs[v]).truncate(order))
        return cache[e]

    out: dict = {}
    for deg, index, c in f._sorted_terms():
        if nilpotent and order is not None and deg > order:
            break
        term = None
        for v, e in enumerate(index):
            if e:
                p = power(v, e)
                term = p if term is None else term * p
        if term is None:
            term = one
        for k, val in term.items():
            out[k] = out.get(k, 0) + val * c
    return TruncatedSeries._raw(m, order, {k: v for k, v in out.items() if v != 0})


def series_invert_unit(u: TruncatedSeries, order: int | None = None) -> TruncatedSeries:
    """Multiplicative inverse of a series with nonzero constant term."""
    n = _min_order(u.order, order)
    if n is None:
        raise ValidationError("inverting a polynomial needs an explicit truncation order")
    c0 = u.constant_term()
    if c0 == 0:
        raise ComputationError("cannot invert a series with zero constant term")
    inv0 = 1 / c0
    parts = [u.homogeneous_part(k) for k in range(n + 1)]
    vparts = [TruncatedSeries.constant(inv0, u.num_vars)]
    for k in range(1, n + 1):
        acc: dict = {}
        for j in range(1, k + 1):
            if parts[j].is_zero() or vparts[k - j].is_zero():
                continue
            for idx, val in (parts[j] * vparts[k - j]).items():
                acc[idx] = acc.get(idx, 0) + val
        vparts.append(TruncatedSeries(u.num_vars, acc).scale(-inv0))
    out: dict = {}
    for p in vparts:
        out.update(p._coeffs)
    return TruncatedSeries._raw(u.num_vars, n, out)


class PolyRational:
    """Quotient of two exact polynomials in the same variables."""

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator, denominator=None, num_vars: int | None = None):
        if num_vars is None:
            for part in (numerator, denominator):
                if isinstance(part, TruncatedSeries):
                    num_vars = part.num_vars
                    break
            else:
                raise ValidationError("num_vars needed when both parts are scalars")
        num = _as_poly(numerator, num_vars)
        den = _as_poly(1 if denominator is None else denominator, num_vars)
        if den.is_zero():
            raise ValidationError("denominator is the zero polynomial")
        self.numerator = num
        self.denominator = den

    @property
    def num_vars(self) -> int:
        return self.numerator.num_vars

    @classmethod
    def polynomial(cls, p) -> "PolyRational":
        return cls(p)

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def is_polynomial(self) -> bool:
        return self.denominator.degree() == 0

    def evaluate(self, point: Sequence) -> Scalar:
        den = self.denominator.evaluate(point)
        if den == 0:
            raise PoleError(f"denominator {self.denominator} vanishes at {list(map(str, point))}")
        return self.numerator.evaluate(point) / den

    def evaluate_numeric(self, *coords):
        return self.numerator.evaluate_numeric(*coords) / self.denominator.evaluate_numeric(*coords)

    def expand(self, order: int) -> TruncatedSeries:
        return poly_rational_expand(self, order)

    def derivative(self, var: int) -> "PolyRational":
        n, d = self.numerator, self.denominator
        if d.degree() == 0:
            return PolyRational(n.derivative(var) * (1 / d.constant_term()), None, self.num_vars)
        return PolyRational(n.derivative(var) * d - n * d.derivative(var), d * d)

    def shift(self, point: Sequence) -> "PolyRational":
        """The function ``y -> r(point + y)``."""
        k = self.num_vars
        gs = [TruncatedSeries.variable(i, k) + scalar(point[i]) for i in range(k)]
        return PolyRational(series_substitute(self.numerator, gs),
                            series_substitute(self.denominator, gs))

    def _coerce(self, other) -> "PolyRational":
        if isinstance(other, PolyRational):
            if other.num_vars != self.num_vars:
                raise ValidationError("variable-count mismatch")
            return other
        return PolyRational(other, None, self.num_vars)

    def __add__(self, other):
        other = self._coerce(other)
        if self.denominator == other.denominator:
            return PolyRational(self.numerator + other.numerator, self.denominator)
        return PolyRational(self.numerator * other.denominator + other.numerator * self.denominator,
                            self.denominator * other.denominator)

    __radd__ = __add__

    def __neg__(self):
        return PolyRational(-self.numerator, self.denominator)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PolyRational):
            other = self._coerce(other)
            return PolyRational(self.numerator * other.numerator,
                                self.denominator * other.denominator)
        if isinstance(other, TruncatedSeries):
            return PolyRational(self.numerator * other, self.denominator)
        return PolyRational(self.numerator.scale(other), self.denominator)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, PolyRational):
            return (self.num_vars == other.num_vars and
                    self.numerator * other.denominator == other.numerator * self.denominator)
        if isinstance(other, TruncatedSeries):
            return self == PolyRational(other)
        return NotImplemented

    def __hash__(self):
        raise TypeError("PolyRational is not hashable (equality is up to cancellation)")

    def format(self, names=None) -> str:
        num = self.numerator.format(names)
        if self.is_polynomial() and self.denominator.constant_term() == 1:
            return num
        return f"({num})/({self.denominator.format(names)})"

    def __repr__(self):
        return f"PolyRational({self.format()!r})"

    def to_json(self, names=None) -> dict:
        return {"num": self.numerator.to_json(names), "den": self.denominator.to_json(names)}

    @classmethod
    def from_json(cls, num: Mapping, den: Mapping | None = None) -> "PolyRational":
        n = TruncatedSeries.from_json(num).with_order(None)
        d = None if den is None else TruncatedSeries.from_json(den).with_order(None)
        return cls(n, d)


def _as_poly(part, num_vars: int) -> TruncatedSeries:
    if isinstance(part, TruncatedSeries):
        if part.num_vars != num_vars:
            raise ValidationError("numerator and denominator use different variable sets")
        if part.order is not None:
            raise ValidationError("rational-function parts must be exact polynomials")
        return part
    return TruncatedSeries.constant(part, num_vars)


def poly_rational_expand(r: PolyRational, order: int) -> TruncatedSeries:
    """Taylor expansion at the origin to total degree ``order``."""
    if r.denominator.constant_term() == 0:
        raise PoleError("rational function has a pole at the origin")
    inv = series_invert_unit(r.denominator, order)
    return r.numerator.truncate(order) * inv


# exact polynomial gcd/lcm/division, delegated to sympy

def _to_sympy(polys: Sequence[TruncatedSeries]):
    import sympy
    from sympy.polys.domains import QQ, QQ_I

    k = polys[0].num_vars
    gens = sympy.symbols(f"_v0:{max(k, 1)}")[:max(k, 1)]
    complex_coeffs = any(isinstance(c, ExactScalar) for p in polys for _, c in p.items())
    domain = QQ_I if complex_coeffs else QQ
    out = []
    for p in polys:
        terms = {}
        for index, c in p.items():
            key = index if k else (0,)
            if complex_coeffs:
                terms[key] = domain.from_sympy(sympy.Rational(_re(c).numerator, _re(c).denominator)
                                               + sympy.I * sympy.Rational(_im(c).numerator, _im(c).denominator))
            else:
                terms[key] = domain.from_sympy(sympy.Rational(c.numerator, c.denominator))
        out.append(sympy.Poly.from_dict(terms, *gens, domain=domain) if terms
                   else sympy.Poly(0, *gens, domain=domain))
    return out


def _from_sympy(p, num_vars: int) -> TruncatedSeries:
    import sympy

    coeffs = {}
    for monom, c in p.terms():
        re_part, im_part = sympy.re(c), sympy.im(c)
        value = ExactScalar._make(Fraction(int(re_part.p), int(re_part.q)),
                                  Fraction(int(im_part.p), int(im_part.q)))
        coeffs[tuple(monom) if num_vars else ()] = value
    return TruncatedSeries(num_vars, coeffs)


def parse_polynomial(text: str, names: Sequence[str]) -> TruncatedSeries:
    """Polynomial from an expression such as ``"x + 3/2*x^4 - i*y"``."""
    import sympy
    from sympy.parsing.sympy_parser import parse_expr, standard_transformations

    symbols = sympy.symbols(list(names))
    local = {str(v): v for v in symbols}
    local.update({"i": sympy.I, "I": sympy.I, "j": sympy.I})
    try:
        expr = parse_expr(text.replace("^", "**"), local_dict=local,
                          transformations=standard_transformations, evaluate=True)
        poly = sympy.Poly(sympy.nsimplify(sympy.expand(expr), rational=True), *symbols,
                          domain=sympy.QQ_I)
    except (sympy.SympifyError, sympy.PolynomialError, SyntaxError, TypeError,
            sympy.polys.polyerrors.CoercionFailed) as exc:
        raise ValidationError(f"cannot read {text!r} as a polynomial in {list(names)}") from exc
    return _from_sympy(poly, len(symbols))


def poly_lcm(polys: Sequence[TruncatedSeries]) -> TruncatedSeries:
    """Least common multiple, normalized to constant term 1 when possible."""
    polys = list(polys)
    if not polys:
        raise ValidationError("lcm of an empty list")
    k = polys[0].num_vars
    if all(p.degree() == 0 for p in polys):
        return TruncatedSeries.constant(1, k)
    converted = _to_sympy(polys)
    acc = converted[0]
    for p in converted[1:]:
        acc = acc.lcm(p)
    result = _from_sympy(acc, k)
    return normalize_poly(result)


def normalize_poly(p: TruncatedSeries) -> TruncatedSeries:
    """Scale so the constant term (else the first term) equals 1."""
    c = p.constant_term()
    if c == 0:
        terms = p._sorted_terms()
        if not terms:
            return p
        c = terms[0][2]
    return p.scale(1 / c)


def poly_exact_div(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Exact quotient ``a / b``; raises if ``b`` does not divide ``a``."""
    if b.degree() == 0:
        return a.scale(1 / b.constant_term())
    sa, sb = _to_sympy([a, b])
    q, r = sa.div(sb)
    if not r.is_zero:
        raise ComputationError("polynomial division is not exact")
    return _from_sympy(q, a.num_vars)


@dataclass(frozen=True)
class SDElement:
    """Element of the small-denominators ring at ``alpha``.

    Represents ``numerator / prod((alpha + omega, J) ** mult)``.  No
    validation happens at construction; see :func:`sd_validate`.
    """

    numerator: TruncatedSeries
    factors: tuple
    alpha: tuple

    @property
    def num_vars(self) -> int:
        return len(self.alpha)

    def linear_form(self, J: Sequence[int]) -> TruncatedSeries:
        n = self.num_vars
        const = sum((scalar(a) * j for a, j in zip(self.alpha, J)), Fraction(0))
        poly = TruncatedSeries.constant(const, n)
        for i, j in enumerate(J):
            if j:
                poly = poly + TruncatedSeries.variable(i, n).scale(j)
        return poly

    def form_value(self, J: Sequence[int], omega: Sequence) -> Scalar:
        return sum(((scalar(a) + scalar(w)) * j for a, w, j in zip(self.alpha, omega, J)),
                   Fraction(0))

    def denominator_value(self, omega: Sequence) -> Scalar:
        value: Scalar = Fraction(1)
        for J, mult in self.factors:
            value = value * self.form_value(J, omega) ** mult
        return value

    def denominator_polynomial(self) -> TruncatedSeries:
        den = TruncatedSeries.constant(1, self.num_vars)
        for J, mult in self.factors:
            den = den * self.linear_form(J) ** mult
        return den

    def pole_factors(self, omega: Sequence) -> list[tuple]:
        """The lattice vectors whose resonance hyperplane contains ``omega``."""
        return [tuple(J) for J, mult in self.factors
                if mult > 0 and self.form_value(J, omega) == 0]

    def evaluate(self, omega: Sequence) -> Scalar:
        den = self.denominator_value(omega)
        if den == 0:
            raise PoleError(f"resonance pole at omega={list(map(str, omega))}: "
                            f"factors {self.pole_factors(omega)} vanish")
        return self.numerator.evaluate(omega) / den

    def normalized(self) -> "SDElement":
        """Merge repeated factors and orient each J with first nonzero entry positive."""
        _require_valid(self)
        merged: dict = {}
        sign = 1
        for J, mult in self.factors:
            J = tuple(int(j) for j in J)
            lead = next(j for j in J if j)
            if lead < 0:
                J = tuple(-j for j in J)
                sign *= (-1) ** mult
            merged[J] = merged.get(J, 0) + mult
        factors = tuple(sorted((J, m) for J, m in merged.items() if m))
        return SDElement(self.numerator.scale(sign), factors, tuple(self.alpha))

    def __mul__(self, other: "SDElement") -> "SDElement":
        a, b = self.normalized(), other.normalized()
        _same_base(a, b)
        merged = dict(a.factors)
        for J, m in b.factors:
            merged[J] = merged.get(J, 0) + m
        return SDElement(a.numerator * b.numerator, tuple(sorted(merged.items())), a.alpha)

    def __add__(self, other: "SDElement") -> "SDElement":
        a, b = self.normalized(), other.normalized()
        _same_base(a, b)
        fa, fb = dict(a.factors), dict(b.factors)
        common = {J: max(fa.get(J, 0), fb.get(J, 0)) for J in set(fa) | set(fb)}
        num_a, num_b = a.numerator, b.numerator
        for J, m in common.items():
            if m > fa.get(J, 0):
                num_a = num_a * a.linear_form(J) ** (m - fa.get(J, 0))
            if m > fb.get(J, 0):
                num_b = num_b * b.linear_form(J) ** (m - fb.get(J, 0))
        return SDElement(num_a + num_b, tuple(sorted(common.items())), a.alpha)

    def __neg__(self) -> "SDElement":
        return SDElement(-self.numerator, self.factors, self.alpha)

    def __sub__(self, other: "SDElement") -> "SDElement":
        return self + (-other)


def _require_valid(elem: SDElement):
    if not sd_validate(elem):
        raise ValidationError("not a valid small-denominators element")


def _same_base(a: SDElement, b: SDElement):
    if tuple(map(scalar, a.alpha)) != tuple(map(scalar, b.alpha)):
        raise ValidationError("elements live in rings at different base points")


def sd_validate(elem: SDElement) -> bool:
    """True iff every denominator factor is a linear form (alpha+omega, J) with integral J != 0."""
    try:
        n = len(elem.alpha)
        for a in elem.alpha:
            scalar(a)
        if not isinstance(elem.numerator, TruncatedSeries) or elem.numerator.num_vars != n:
            return False
        if elem.numerator.order is not None:
            return False
        for factor in elem.factors:
            J, mult = factor
            if isinstance(mult, bool) or not isinstance(mult, int) or mult < 0:
                return False
            J = tuple(J)
            if len(J) != n:
                return False
            if any(isinstance(j, bool) or not isinstance(j, (int, np.integer)) for j in J):
                return False
            if all(j == 0 for j in J):
                return False
    except (TypeError, ValueError):
        return False
    return True


def multi_indices(num_vars: int, degree: int) -> Iterable[tuple]:
    """All multi-indices of exactly the given total degree, in lexicographic order."""
    if num_vars == 0:
        if degree == 0:
            yield ()
        return
    if num_vars == 1:
        yield (degree,)
        return
    for first in range(degree + 1):
        for rest in multi_indices(num_vars - 1, degree - first):
            yield (first,) + rest
