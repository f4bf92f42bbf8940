"""Exact affine geometry of jets.

Jet spans are read as "the point ``g(alpha)`` plus the linear span of the
partial derivatives of orders ``1..m``".  Taylor coefficients and raw
derivatives differ by the nonzero factors ``I!`` so they span the same
space; the Taylor form is used internally.  :func:`jet_span_map` with
``raw=True`` gives the literal affine hull of the derivative vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

from .birkhoff_solver import BirkhoffPolynomial, birkhoff_poly
from .correspondence import (
    Correspondence,
    evaluate,
    jacobian_y,
    recenter,
    truncate_correspondence,
)
from .errors import (
    IncoherentFamilyError,
    MonotonicityError,
    NotRegularError,
    SingularJacobianError,
    TruncationError,
    ValidationError,
)
from .exact_algebra import (
    ExactScalar,
    Scalar,
    TruncatedSeries,
    scalar,
    scalar_from_json,
    scalar_to_json,
    series_substitute,
)
from .linalg import SingularMatrixError, inverse, nullspace, rref


class AffineSubspace:
    """Affine subspace of C^n in canonical form.

    Directions are kept in reduced row-echelon form and the base point is
    reduced against them (zero in every pivot column), so two subspaces are
    equal exactly when their canonical data are equal.
    """

    __slots__ = ("ambient_dim", "base_point", "directions", "pivots")

    def __init__(self, ambient_dim: int, base_point: Sequence, directions: Sequence[Sequence] = ()):
        base = [scalar(v) for v in base_point]
        if len(base) != ambient_dim:
            raise ValidationError("base point has the wrong dimension")
        rows = [[scalar(v) for v in row] for row in directions]
        if any(len(r) != ambient_dim for r in rows):
            raise ValidationError("direction vector has the wrong dimension")
        red, pivots = rref(rows, ambient_dim) if rows else ([], [])
        for row, p in zip(red, pivots):
            if base[p] != 0:
                f = base[p]
                base = [a - f * b for a, b in zip(base, row)]
        self.ambient_dim = ambient_dim
        self.base_point = tuple(base)
        self.directions = tuple(tuple(r) for r in red)
        self.pivots = tuple(pivots)

    @property
    def dim(self) -> int:
        return len(self.directions)

    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def __eq__(self, other):
        if not isinstance(other, AffineSubspace):
            return NotImplemented
        return (self.ambient_dim == other.ambient_dim and self.base_point == other.base_point
                and self.directions == other.directions)

    def __hash__(self):
        return hash((self.ambient_dim, self.base_point, self.directions))

    def _reduce(self, v: Sequence) -> list:
        v = [scalar(a) for a in v]
        for row, p in zip(self.directions, self.pivots):
            if v[p] != 0:
                f = v[p]
                v = [a - f * b for a, b in zip(v, row)]
        return v

    def contains_vector(self, v: Sequence) -> bool:
        """Is ``v`` in the direction space?"""
        return all(a == 0 for a in self._reduce(v))

    def contains_point(self, p: Sequence) -> bool:
        if len(p) != self.ambient_dim:
            return False
        diff = [scalar(a) - b for a, b in zip(p, self.base_point)]
        return self.contains_vector(diff)

    def contains(self, other: "AffineSubspace") -> bool:
        if other.ambient_dim != self.ambient_dim:
            return False
        return (self.contains_point(other.base_point)
                and all(self.contains_vector(v) for v in other.directions))

    def __le__(self, other: "AffineSubspace") -> bool:
        return other.contains(self)

    def extend(self, vectors: Sequence[Sequence]) -> "AffineSubspace":
        """The subspace through the same base point with extra direction vectors."""
        return AffineSubspace(self.ambient_dim, self.base_point, list(self.directions) + list(vectors))

    def translate(self, offset: Sequence) -> "AffineSubspace":
        return AffineSubspace(self.ambient_dim,
                              [a + scalar(b) for a, b in zip(self.base_point, offset)],
                              self.directions)

    def equations(self) -> list[tuple[tuple, Scalar]]:
        """Canonical affine equations ``(normal, rhs)`` meaning ``normal . y = rhs``."""
        normals = nullspace(self.directions, self.ambient_dim)
        if normals:
            normals, _ = rref(normals, self.ambient_dim)
        return [(tuple(n), sum((a * b for a, b in zip(n, self.base_point)), Fraction(0)))
                for n in normals]

    def describe(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names else [f"y{i + 1}" for i in range(self.ambient_dim)]
        if self.is_full():
            return f"C^{self.ambient_dim}"
        eqs = []
        for normal, rhs in self.equations():
            terms = [f"({c})*{n}" if isinstance(c, ExactScalar) else
                     f"{'-' if c < 0 else '+'} {'' if abs(c) == 1 else f'{abs(c)}*'}{n}"
                     for c, n in zip(normal, names) if c != 0]
            lhs = " ".join(terms).lstrip("+ ")
            eqs.append(f"{lhs} = {rhs}")
        return "{" + ", ".join(eqs) + "}"

    def __repr__(self):
        return f"AffineSubspace(dim={self.dim}, {self.describe()})"

    def to_json(self) -> dict:
        return {"ambient_dim": self.ambient_dim,
                "base": [scalar_to_json(v) for v in self.base_point],
                "directions": [[scalar_to_json(v) for v in row] for row in self.directions]}

    @classmethod
    def from_json(cls, obj) -> "AffineSubspace":
        base = [scalar_from_json(v) for v in obj["base"]]
        dirs = [[scalar_from_json(v) for v in row] for row in obj.get("directions", [])]
        return cls(int(obj.get("ambient_dim", len(base))), base, dirs)


def affine_span(points: Sequence[Sequence]) -> AffineSubspace:
    """Smallest affine subspace containing the points."""
    points = [[scalar(v) for v in p] for p in points]
    if not points:
        raise ValidationError("affine span of an empty set")
    n = len(points[0])
    if any(len(p) != n for p in points):
        raise ValidationError("points have different dimensions")
    base = points[0]
    return AffineSubspace(n, base, [[a - b for a, b in zip(p, base)] for p in points[1:]])


# maps given as polynomials --------------------------------------------------

def _components(g) -> list[TruncatedSeries]:
    if isinstance(g, BirkhoffPolynomial):
        return g.polynomials()
    comps = list(g)
    if not comps or not all(isinstance(c, TruncatedSeries) for c in comps):
        raise ValidationError("a polynomial map is a non-empty list of TruncatedSeries")
    d = comps[0].num_vars
    if any(c.num_vars != d for c in comps):
        raise ValidationError("components use different variable sets")
    return [c.with_order(None) for c in comps]


def map_degree(g) -> int:
    return max(max(c.degree() for c in _components(g)), 0)


def _recentered(comps: list[TruncatedSeries], alpha) -> list[TruncatedSeries]:
    d = comps[0].num_vars
    if alpha is None or all(scalar(a) == 0 for a in alpha):
        return comps
    if len(alpha) != d:
        raise ValidationError("base point has the wrong dimension")
    shift = [TruncatedSeries.variable(i, d) + scalar(alpha[i]) for i in range(d)]
    return [series_substitute(c, shift) for c in comps]


def _taylor_vectors(comps: list[TruncatedSeries], max_order: int) -> list[list[tuple]]:
    """Per total degree k, the nonzero coefficient vectors of x^I with |I| = k."""
    by_degree: list[dict] = [dict() for _ in range(max_order + 1)]
    for j, comp in enumerate(comps):
        for index, c in comp.items():
            k = sum(index)
            if k <= max_order:
                by_degree[k].setdefault(index, [Fraction(0)] * len(comps))[j] = c
    return [list(map(tuple, level.values())) for level in by_degree]


def _factorial_weight(index: tuple) -> int:
    w = 1
    for i in index:
        w *= math.factorial(i)
    return w


def jet_span_map(g, alpha=None, m: int = 0, raw: bool = False) -> AffineSubspace:
    """The m-jet span ``[g, alpha]_m`` of a polynomial map.

    With ``raw=True`` returns the literal affine hull of the derivative
    vectors ``{d^I g(alpha) : |I| <= m}`` (including ``I = 0``).
    """
    comps = _recentered(_components(g), alpha)
    e = len(comps)
    point = [c.constant_term() for c in comps]
    if raw:
        vecs = [point]
        for comp_index in _all_indices(comps, m):
            w = _factorial_weight(comp_index)
            vecs.append([c.coefficient(comp_index) * w for c in comps])
        return affine_span(vecs)
    levels = _taylor_vectors(comps, m)
    dirs = [v for k in range(1, m + 1) for v in levels[k]]
    return AffineSubspace(e, point, dirs)


def _all_indices(comps, m):
    seen = set()
    for c in comps:
        for index, _ in c.items():
            if 0 < sum(index) <= m:
                seen.add(index)
    return sorted(seen, key=lambda i: (sum(i), i))


@dataclass(frozen=True)
class JetSpanChain:
    spans: tuple
    tau: int

    @property
    def stable(self) -> AffineSubspace:
        return self.spans[-1]

    def is_monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.spans, self.spans[1:]))

    def jumps(self) -> list[int]:
        """Indices m at which the span strictly grows from m-1 to m."""
        return [m for m in range(1, len(self.spans)) if self.spans[m] != self.spans[m - 1]]

    def to_json(self) -> dict:
        return {"tau": self.tau, "chain": [s.to_json() for s in self.spans],
                "stable": self.stable.to_json()}


def _stabilization_index(spans: Sequence[AffineSubspace]) -> int:
    last = spans[-1]
    tau = len(spans) - 1
    while tau > 0 and spans[tau - 1] == last:
        tau -= 1
    return tau


def torsion_index(g, alpha=None, m_max: int | None = None) -> JetSpanChain:
    """Jet-span chain for ``m = 0..m_max`` and the torsion index."""
    comps = _recentered(_components(g), alpha)
    deg = max(max(c.degree() for c in comps), 0)
    if m_max is None:
        m_max = deg
    if m_max < deg:
        raise TruncationError(f"m_max={m_max} is below the map degree {deg}; "
                              "stabilization cannot be certified")
    levels = _taylor_vectors(comps, m_max)
    point = [c.constant_term() for c in comps]
    span = AffineSubspace(len(comps), point)
    spans = [span]
    for k in range(1, m_max + 1):
        if levels[k] and not all(span.contains_vector(v) for v in levels[k]):
            span = span.extend(levels[k])
        spans.append(span)
    return JetSpanChain(tuple(spans), _stabilization_index(spans))


# correspondences -------------------------------------------------------------

def _split_point(c: Correspondence, omega):
    if omega is None or (not isinstance(omega, (list, tuple)) and omega == 0):
        return [0] * c.d, [0] * c.e
    omega = list(omega)
    if len(omega) != c.d + c.e:
        raise ValidationError(f"point must have {c.d + c.e} coordinates")
    return omega[:c.d], omega[c.d:]


def check_regular(c: Correspondence, omega=None):
    """Raise :class:`NotRegularError` unless ``c`` is regular at ``omega``."""
    x0, y0 = _split_point(c, omega)
    if any(v != 0 for v in evaluate(c, x0, y0)):
        raise NotRegularError("point does not lie on the correspondence")
    try:
        inverse(jacobian_y(c, x0, y0))
    except SingularMatrixError:
        raise NotRegularError("d_y f is singular: the tangent space does not project "
                              "isomorphically onto the x-space") from None


def relative_jet_span(c: Correspondence, omega=None, m: int = 0) -> AffineSubspace:
    """The F-factor of the relative m-jet span ``<V, omega>_m = C^d x F``."""
    x0, y0 = _split_point(c, omega)
    check_regular(c, list(x0) + list(y0))
    local = recenter(c, x0, y0)
    try:
        b = birkhoff_poly(local, m)
    except SingularJacobianError as exc:
        raise NotRegularError(str(exc)) from exc
    return jet_span_map(b, None, m).translate(y0)


@dataclass(frozen=True)
class SpanChain:
    spans: tuple
    rho: int
    w_inf: AffineSubspace

    def to_json(self) -> dict:
        return {"rho": self.rho, "chain": [s.to_json() for s in self.spans],
                "w_inf": self.w_inf.to_json()}


def span_chain(family: Callable[[int], Correspondence], n_max: int) -> SpanChain:
    """The chain ``<V_n, 0>`` for ``n = 0..n_max``, its stabilization level and limit."""
    spans = []
    prev_c = None
    for n in range(n_max + 1):
        c = family(n)
        if prev_c is not None and truncate_correspondence(c, n - 1) != prev_c:
            raise IncoherentFamilyError(f"family({n}) does not truncate to family({n - 1})")
        span = relative_jet_span(c, None, n)
        if spans and not spans[-1] <= span:
            raise MonotonicityError(f"<V_{n - 1},0> is not contained in <V_{n},0>")
        spans.append(span)
        prev_c = c
    rho = _stabilization_index(spans)
    return SpanChain(tuple(spans), rho, spans[-1])


class KMSCertificate(NamedTuple):
    l: int | None
    ok: bool


def kms_certificate(b, target: AffineSubspace) -> KMSCertificate:
    """Smallest jet order whose span equals ``target``."""
    comps = _components(b)
    if len(comps) != target.ambient_dim:
        return KMSCertificate(None, False)
    deg = max(max(c.degree() for c in comps), 0)
    top = b.order if isinstance(b, BirkhoffPolynomial) else deg
    chain = torsion_index(comps, None, max(top, deg))
    if not target.contains(chain.stable):
        return KMSCertificate(None, False)
    for l, span in enumerate(chain.spans):
        if span == target:
            return KMSCertificate(l, True)
    return KMSCertificate(None, False)


def image_span_sample(g, samples: Sequence[Sequence]) -> AffineSubspace:
    """Affine span of the images ``g(s)`` of sample points."""
    comps = _components(g)
    return affine_span([[c.evaluate(s) for c in comps] for s in samples])
