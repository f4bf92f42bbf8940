"""Birkhoff polynomials: truncated solutions ``y = b(x)`` of ``f(x, y) = 0``.

The main route is Newton iteration on jets,

    b <- b - (d_y f(x, b))^{-1} f(x, b),

which doubles the number of correct degrees per step.  The inverse of the
series-valued Jacobian is itself obtained by Newton iteration
``X <- X (2I - J X)``.  :func:`undetermined_coefficients_oracle` solves
degree by degree and shares no code with the Newton path beyond series
composition, so the two are used to check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .correspondence import (
    Correspondence,
    clear_denominators,
    evaluate,
    jacobian_y,
    local_series,
    truncate_correspondence,
    x_names,
)
from .errors import (
    IncoherentFamilyError,
    NotRegularError,
    PoleError,
    SingularJacobianError,
    ValidationError,
)
from .exact_algebra import TruncatedSeries, multi_indices, series_substitute
from .linalg import SingularMatrixError, inverse, solve


@dataclass(frozen=True)
class BirkhoffPolynomial:
    """Degree-``order`` jet of the solution map ``x -> y``."""

    d: int
    e: int
    order: int
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.e:
            raise ValidationError(f"expected {self.e} components, got {len(comps)}")
        clean = []
        for comp in comps:
            if comp.num_vars != self.d:
                raise ValidationError("component lives in the wrong number of variables")
            if comp.constant_term() != 0:
                raise ValidationError("Birkhoff polynomial components vanish at the origin")
            clean.append(comp.with_order(self.order))
        object.__setattr__(self, "components", tuple(clean))

    def coefficients(self, component: int = 0) -> list[Fraction]:
        """Dense coefficient list ``[b_0, ..., b_order]`` (single x-variable only)."""
        if self.d != 1:
            raise ValidationError("dense coefficients need d == 1")
        comp = self.components[component]
        return [comp.coefficient((k,)) for k in range(self.order + 1)]

    def truncate(self, order: int) -> "BirkhoffPolynomial":
        if order > self.order:
            raise ValidationError("cannot extend a jet by truncation")
        return BirkhoffPolynomial(self.d, self.e, order,
                                  tuple(c.truncate(order) for c in self.components))

    def polynomials(self) -> list[TruncatedSeries]:
        """The components as exact polynomials."""
        return [c.with_order(None) for c in self.components]

    def evaluate(self, x: Sequence) -> list:
        return [c.with_order(None).evaluate(x) for c in self.components]

    def format(self) -> str:
        names = x_names(self.d)
        if self.e == 1:
            return f"b(x) = {self.components[0].format(names)}"
        return "\n".join(f"b{i + 1}(x) = {c.format(names)}"
                         for i, c in enumerate(self.components))

    def __str__(self):
        return self.format()

    def to_json(self) -> dict:
        names = x_names(self.d)
        return {"d": self.d, "e": self.e, "order": self.order,
                "components": [c.to_json(names) for c in self.components]}

    @classmethod
    def from_json(cls, obj) -> "BirkhoffPolynomial":
        comps = tuple(TruncatedSeries.from_json(c) for c in obj["components"])
        return cls(int(obj["d"]), int(obj["e"]), int(obj["order"]), comps)


def _base_jacobian(c: Correspondence):
    """Check the solver preconditions and return ``d_y f(0, 0)``."""
    zero_x, zero_y = [0] * c.d, [0] * c.e
    try:
        value = evaluate(c, zero_x, zero_y)
        jac = jacobian_y(c, zero_x, zero_y)
    except PoleError as exc:
        raise PoleError(f"a coefficient has a pole at the base point: {exc}") from exc
    if any(v != 0 for v in value):
        raise NotRegularError("the origin does not lie on the correspondence: f(0,0) != 0")
    try:
        inv = inverse(jac)
    except SingularMatrixError:
        raise SingularJacobianError(
            "d_y f(0,0) is not of maximal rank; the implicit function theorem does not apply"
        ) from None
    return jac, inv


def _mat_series_mul(a, b, order: int):
    n, k, m = len(a), len(b), len(b[0])
    return [[sum((a[i][t] * b[t][j] for t in range(k)),
                 TruncatedSeries.zero(a[0][0].num_vars, order))
             for j in range(m)] for i in range(n)]


def series_matrix_inverse(jac, order: int, inv0=None):
    """Inverse of a square matrix of series whose constant part is invertible."""
    n = len(jac)
    nv = jac[0][0].num_vars
    if inv0 is None:
        inv0 = inverse([[entry.constant_term() for entry in row] for row in jac])
    X = [[TruncatedSeries.constant(v, nv, order) for v in row] for row in inv0]
    two = [[TruncatedSeries.constant(2 if i == j else 0, nv, order) for j in range(n)]
           for i in range(n)]
    precision = 0
    while precision < order:
        JX = _mat_series_mul(jac, X, order)
        X = _mat_series_mul(X, [[two[i][j] - JX[i][j] for j in range(n)] for i in range(n)],
                            order)
        precision = 2 * precision + 1
    return X


def newton_iterates(c: Correspondence, order: int) -> Iterator[list[TruncatedSeries]]:
    """Yield the linear solution and then every Newton iterate (truncated at ``order``)."""
    if order < 0:
        raise ValidationError("order must be non-negative")
    _, inv_a = _base_jacobian(c)
    d, e = c.d, c.e
    if order == 0:
        yield [TruncatedSeries.zero(d, 0) for _ in range(e)]
        return
    F = local_series(c, order + 1)
    F_main = [f.truncate(order) for f in F]
    dF = [[f.derivative(d + j) for j in range(e)] for f in F]
    xs = [TruncatedSeries.variable(i, d, order) for i in range(d)]
    grad_x = [[f.coefficient(tuple(int(t == k) for t in range(d + e))) for k in range(d)]
              for f in F]
    b = []
    for j in range(e):
        comp = TruncatedSeries.zero(d, order)
        for k in range(d):
            coeff = -sum((inv_a[j][i] * grad_x[i][k] for i in range(e)), Fraction(0))
            comp = comp + xs[k].scale(coeff)
        b.append(comp)
    yield b
    while True:
        args = xs + b
        residual = [series_substitute(f, args) for f in F_main]
        if all(r.is_zero() for r in residual):
            return
        jac = [[series_substitute(dF[i][j], args) for j in range(e)] for i in range(e)]
        jinv = series_matrix_inverse(jac, order, inv_a)
        b = [b[j] - sum((jinv[j][i] * residual[i] for i in range(e)),
                        TruncatedSeries.zero(d, order))
             for j in range(e)]
        yield b


def birkhoff_poly(c: Correspondence, order: int) -> BirkhoffPolynomial:
    """Degree-``order`` Birkhoff polynomial of ``c`` by Newton iteration on jets."""
    precision = 1
    b = None
    for step, b in enumerate(newton_iterates(c, order)):
        if step > 0:
            precision = 2 * precision + 1
        if precision >= order:
            break
    return BirkhoffPolynomial(c.d, c.e, order, tuple(b))


def undetermined_coefficients_oracle(c: Correspondence, order: int) -> BirkhoffPolynomial:
    """Degree-by-degree solve; each degree is a linear system with matrix ``d_y f(0,0)``."""
    if order < 0:
        raise ValidationError("order must be non-negative")
    jac, _ = _base_jacobian(c)
    d, e = c.d, c.e
    F = local_series(c, order)
    xs = [TruncatedSeries.variable(i, d) for i in range(d)]
    b = [TruncatedSeries.zero(d) for _ in range(e)]
    for k in range(1, order + 1):
        args = [v.with_order(k) for v in xs] + [v.with_order(k) for v in b]
        parts = [series_substitute(f.truncate(k), args).homogeneous_part(k) for f in F]
        for index in multi_indices(d, k):
            rhs = [-p.coefficient(index) for p in parts]
            if all(v == 0 for v in rhs):
                continue
            try:
                delta = solve(jac, rhs)
            except SingularMatrixError:
                raise SingularJacobianError("d_y f(0,0) is not of maximal rank") from None
            b = [comp + TruncatedSeries.monomial(index, dv) for comp, dv in zip(b, delta)]
    return BirkhoffPolynomial(d, e, order, tuple(b))


def is_coherent(family: Callable[[int], Correspondence], n: int) -> bool:
    top = family(n)
    return all(truncate_correspondence(top, k) == family(k) for k in range(n + 1))


def birkhoff_limit(family: Callable[[int], Correspondence], order: int) -> BirkhoffPolynomial:
    """Degree-``order`` jet of the limit Birkhoff series of a coherent family."""
    if not is_coherent(family, order):
        raise IncoherentFamilyError("family is not coherent under truncation")
    return birkhoff_poly(family(order), order)


def verify_solution(c: Correspondence, b: BirkhoffPolynomial):
    """Largest ``M`` such that ``f(x, b(x))`` has no terms of total degree ``<= M``.

    Computed exactly through the cleared polynomials, so an exact solution
    returns ``math.inf``.
    """
    if (b.d, b.e) != (c.d, c.e):
        raise ValidationError("dimension mismatch between correspondence and jet")
    cleared = clear_denominators(c)
    if cleared.denominator.constant_term() == 0:
        raise PoleError("common denominator vanishes at the origin")
    xs = [TruncatedSeries.variable(i, c.d) for i in range(c.d)]
    args = xs + b.polynomials()
    val = min(series_substitute(p, args).valuation() for p in cleared.polynomials)
    return math.inf if val == math.inf else val - 1
