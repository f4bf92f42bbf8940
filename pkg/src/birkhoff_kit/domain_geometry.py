"""Shrinking domains X_n, membership tests and convergence bounds.

Two families are modelled:

* pole-disk removal for the Poincare series: ``X_n = D_rho x (D_eta minus
  the disks |y + 1/k| < k^(-alpha_exp), k <= n)``;
* resonance tubes: ``X_n = C^e minus {y : |(y, a)| < delta_a, ||a||_inf <= n}``.

Membership is decided exactly (squared moduli over the rationals) whenever
the inputs are exact and the radii are rational; otherwise floats are used
and ties are resolved towards "not a member".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .correspondence import Correspondence, poincare_system
from .errors import ValidationError
from .exact_algebra import ExactScalar, abs2, scalar, to_complex

_SLACK = 4 * np.finfo(float).eps


def _exact(v):
    """Exact value for ints/Fractions/ExactScalars/strings, ``None`` for floats."""
    if isinstance(v, (int, Fraction, ExactScalar, str)) and not isinstance(v, bool):
        return scalar(v)
    return None


def _as_real(v, name: str):
    if isinstance(v, str):
        v = Fraction(v)
    if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
        raise ValidationError(f"{name} must be a real number")
    return v


def _int_like(v) -> int | None:
    if isinstance(v, int) or (isinstance(v, Fraction) and v.denominator == 1):
        return int(v)
    if isinstance(v, float) and v.is_integer():
        return int(v)
    return None


@dataclass(frozen=True)
class PoleDiskDomain:
    """``D_rho x (D_eta minus union_{k <= n} D_k)`` with ``r_k = k^(-alpha_exp)``."""

    rho: float | Fraction
    eta: float | Fraction
    alpha_exp: float | Fraction = 3
    n: int | None = None

    def __post_init__(self):
        for name in ("rho", "eta", "alpha_exp"):
            object.__setattr__(self, name, _as_real(getattr(self, name), name))
        if not 0 < self.rho < 1:
            raise ValidationError("rho must satisfy 0 < rho < 1")
        if self.eta <= 0:
            raise ValidationError("eta must be positive")
        if self.alpha_exp <= 2:
            raise ValidationError("alpha_exp must exceed 2")
        if self.n is not None and self.n < 0:
            raise ValidationError("n must be non-negative or None")

    def radius_sq(self, k: int):
        """``r_k^2``, exact when the exponent is an integer."""
        a = _int_like(self.alpha_exp)
        if a is not None:
            return Fraction(1, k ** (2 * a))
        return float(k) ** (-2.0 * float(self.alpha_exp))

    def candidate_poles(self, y_abs: float) -> list[int]:
        """Indices k whose disk D_k could contain a point of modulus ``y_abs``."""
        top = self.n
        if top == 0 or y_abs <= 0:
            return []
        # for k >= 2, |y + 1/k| < k^-alpha forces 1/(2k) < |y| < 2/k; D_1 is always checked
        lo = max(2, int(math.floor(0.49 / y_abs)) - 1)
        hi = int(math.ceil(2.01 / y_abs)) + 1
        if top is not None:
            hi = min(hi, top)
        return [1] + list(range(lo, hi + 1))


def pole_membership(dom: PoleDiskDomain, x, y) -> bool:
    """True iff ``|x| <= rho``, ``|y| <= eta`` and ``|y + 1/k| >= r_k`` for k <= n."""
    ex, ey = _exact(x), _exact(y)
    if ex is not None and ey is not None and not isinstance(dom.rho, float) \
            and not isinstance(dom.eta, float):
        if abs2(ex) > Fraction(dom.rho) ** 2 or abs2(ey) > Fraction(dom.eta) ** 2:
            return False
        for k in dom.candidate_poles(abs(to_complex(ey))):
            r2 = dom.radius_sq(k)
            d2 = abs2(ey + Fraction(1, k))
            if isinstance(r2, float):
                if float(d2) < r2 * (1 + _SLACK):
                    return False
            elif d2 < r2:
                return False
        return True
    xc, yc = complex(to_complex(ex) if ex is not None else x), complex(to_complex(ey) if ey is not None else y)
    if abs(xc) > float(dom.rho) * (1 - _SLACK):
        return False
    if abs(yc) > float(dom.eta) * (1 - _SLACK):
        return False
    for k in dom.candidate_poles(abs(yc)):
        r = math.sqrt(float(dom.radius_sq(k)))
        if abs(yc + 1.0 / k) < r * (1 + _SLACK):
            return False
    return True


def pole_margin(dom: PoleDiskDomain, y) -> float:
    """``min_k |y + 1/k| / r_k`` over the removed disks (``inf`` if none are near)."""
    yc = complex(to_complex(scalar(y))) if _exact(y) is not None else complex(y)
    ks = dom.candidate_poles(abs(yc)) if yc != 0 else [1]
    if dom.n == 0:
        ks = []
    ratios = [abs(yc + 1.0 / k) / math.sqrt(float(dom.radius_sq(k))) for k in ks]
    return min(ratios, default=math.inf)


def term_bound(k: int, x_mag, alpha_exp):
    """``k^(alpha-1) * x_mag^k``, the modulus bound of ``x^k/(1+ky)`` off ``D_k``."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    p = _int_like(alpha_exp)
    if p is not None and not isinstance(x_mag, float):
        return Fraction(k) ** (p - 1) * Fraction(x_mag) ** k
    return float(k) ** (float(alpha_exp) - 1) * float(x_mag) ** k


def _round_up(q: Fraction) -> float:
    f = float(q)
    if Fraction(f) < q:
        f = math.nextafter(f, math.inf)
    return f


def tail_bound(n: int, x_mag, alpha_exp, tol: float = 1e-12) -> float:
    """Certified upper bound of ``sum_{k > n} k^(alpha-1) x_mag^k``.

    Exact partial sums up to some K, then the geometric majorant
    ``t_{K+1} / (1 - q)`` with ``q = ((K+2)/(K+1))^(alpha-1) x_mag`` which
    bounds every later ratio of consecutive terms.
    """
    if n < 0:
        raise ValidationError("n must be non-negative")
    if x_mag < 0:
        raise ValidationError("x_mag must be non-negative")
    if x_mag >= 1:
        raise ValidationError("tail bound needs x_mag < 1")
    if x_mag == 0:
        return 0.0
    p = _int_like(alpha_exp)
    exact = p is not None and not isinstance(x_mag, float)
    if exact:
        x = Fraction(x_mag)
        partial = Fraction(0)
        k = n
        while True:
            k += 1
            partial += Fraction(k) ** (p - 1) * x ** k
            q = Fraction(k + 2, k + 1) ** (p - 1) * x
            if q < 1:
                nxt = Fraction(k + 1) ** (p - 1) * x ** (k + 1)
                rem = nxt / (1 - q)
                if rem <= Fraction(tol) * max(partial, Fraction(1, 10 ** 6)) or rem < Fraction(1, 10 ** 15):
                    return _round_up(partial + rem)
    a1 = float(alpha_exp) - 1
    x = float(x_mag)
    terms = []
    k = n
    while True:
        k += 1
        terms.append(k ** a1 * x ** k)
        q = ((k + 2) / (k + 1)) ** a1 * x
        if q < 1:
            rem = (k + 1) ** a1 * x ** (k + 1) / (1 - q)
            total = math.fsum(terms)
            if rem <= tol * max(total, 1e-6) or rem < 1e-15:
                return (total + rem) * (1 + (len(terms) + 8) * _SLACK)


def cauchy_derivative_bound(i: int, j: int, r, eps, sup):
    """``2^j i! j! / (r^j eps^i) * sup``: Cauchy bound for ``d_x^i d_y^j g``."""
    if i < 0 or j < 0:
        raise ValidationError("derivative orders must be non-negative")
    if r <= 0 or eps <= 0:
        raise ValidationError("r and eps must be positive")
    factor = 2 ** j * math.factorial(i) * math.factorial(j)
    if all(not isinstance(v, float) for v in (r, eps, sup)):
        return Fraction(factor) / (Fraction(r) ** j * Fraction(eps) ** i) * Fraction(sup)
    return factor / (float(r) ** j * float(eps) ** i) * float(sup)


# resonance tubes ------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceTubeDomain:
    """Complement of the tubes ``|(y, a)| < delta_c * ||a||_inf^(-delta_gamma)``, ``||a|| <= n``."""

    e: int
    n: int
    delta_c: float | Fraction = Fraction(1, 10)
    delta_gamma: float | Fraction = 3

    def __post_init__(self):
        if self.e < 1 or self.n < 0:
            raise ValidationError("need e >= 1 and n >= 0")
        for name in ("delta_c", "delta_gamma"):
            object.__setattr__(self, name, _as_real(getattr(self, name), name))
        if self.delta_c < 0:
            raise ValidationError("delta_c must be non-negative")

    def delta_sq(self, norm: int):
        g = _int_like(self.delta_gamma)
        if g is not None and not isinstance(self.delta_c, float):
            return Fraction(self.delta_c) ** 2 * Fraction(norm) ** (-2 * g)
        return (float(self.delta_c) * float(norm) ** (-float(self.delta_gamma))) ** 2

    def delta(self, alpha: Sequence[int]) -> float:
        return math.sqrt(float(self.delta_sq(max(abs(a) for a in alpha))))


def lattice_vectors(e: int, n: int, sign_reduced: bool = True) -> list[tuple[int, ...]]:
    """Nonzero integer vectors with sup-norm ``<= n``; one of each ``+-a`` pair if reduced."""
    out = []
    for a in product(range(-n, n + 1), repeat=e):
        if not any(a):
            continue
        if sign_reduced and next(v for v in a if v) < 0:
            continue
        out.append(a)
    return out


def _pairing(y: Sequence, alpha: Sequence[int]):
    return sum((v * a for v, a in zip(y, alpha)), Fraction(0))


def _ratio_sq(dom: ResonanceTubeDomain, y_exact, y_float, alpha):
    """``|(y, a)|^2 / delta_a^2`` as an exact Fraction when possible, else a float."""
    d2 = dom.delta_sq(max(abs(a) for a in alpha))
    if y_exact is not None and isinstance(d2, Fraction):
        if d2 == 0:
            return math.inf
        return abs2(_pairing(y_exact, alpha)) / d2
    s = abs(sum(v * a for v, a in zip(y_float, alpha))) ** 2
    if d2 == 0:
        return math.inf
    return s / float(d2) * (1 - _SLACK)


def _prepare_y(dom: ResonanceTubeDomain, y):
    y = list(y)
    if len(y) != dom.e:
        raise ValidationError(f"y must have {dom.e} coordinates")
    ex = [_exact(v) for v in y]
    y_exact = ex if all(v is not None for v in ex) else None
    y_float = [to_complex(v) if v is not None else complex(w) for v, w in zip(ex, y)]
    return y_exact, y_float


def tube_membership(dom: ResonanceTubeDomain, y) -> bool:
    """True iff ``|(y, a)| >= delta_a`` for every nonzero ``a`` with ``||a||_inf <= n``."""
    y_exact, y_float = _prepare_y(dom, y)
    for alpha in lattice_vectors(dom.e, dom.n):
        if _ratio_sq(dom, y_exact, y_float, alpha) < 1:
            return False
    return True


def diophantine_margin(dom: ResonanceTubeDomain, y) -> float:
    """``min_a |(y, a)| / delta_a``; membership holds iff the margin is ``>= 1``."""
    y_exact, y_float = _prepare_y(dom, y)
    best = math.inf
    below = False
    for alpha in lattice_vectors(dom.e, dom.n):
        r = _ratio_sq(dom, y_exact, y_float, alpha)
        below = below or r < 1
        best = min(best, r)
    if best == math.inf:
        return math.inf
    margin = math.sqrt(float(best))
    if below and margin >= 1:
        margin = math.nextafter(1.0, 0.0)
    if not below and margin < 1:
        margin = 1.0
    return margin


# convergence of the truncated Poincare series --------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    domain: PoleDiskDomain
    truncation_pair: tuple
    analytic_bound: float
    sampled_sup: float
    samples: int

    @property
    def verdict(self) -> bool:
        return self.sampled_sup <= self.analytic_bound


def sample_pole_domain(dom: PoleDiskDomain, grid_size: int) -> np.ndarray:
    """Complex y-values of a ``grid_size x grid_size`` grid on ``[-eta, eta]^2`` lying in X_n."""
    t = np.linspace(-float(dom.eta), float(dom.eta), grid_size)
    ys = (t[None, :] + 1j * t[:, None]).ravel()
    keep = np.ones(ys.shape, dtype=bool)
    keep &= np.abs(ys) <= float(dom.eta)
    top = dom.n if dom.n is not None else 0
    for k in range(1, top + 1):
        r = math.sqrt(float(dom.radius_sq(k)))
        keep &= np.abs(ys + 1.0 / k) >= r * (1 + _SLACK)
    return ys[keep]


def convergence_report(family: Callable[[int], Correspondence] = poincare_system,
                       dom: PoleDiskDomain | None = None, grid_size: int = 50,
                       m: int = 5, n: int = 15) -> ConvergenceReport:
    """Compare ``sup |f_n - f_m|`` on sampled points of X_n with ``tail_bound(m)``.

    ``y`` runs over the grid, ``x`` over ``grid_size`` points of the circle
    ``|x| = rho`` (where ``|x|^k`` is largest).
    """
    if dom is None:
        dom = PoleDiskDomain(Fraction(1, 2), Fraction(3, 4), 3)
    if m > n:
        raise ValidationError("need m <= n")
    if grid_size < 2:
        raise ValidationError("grid_size must be at least 2")
    sample_dom = replace(dom, n=max(n, dom.n or 0))
    ys = sample_pole_domain(sample_dom, grid_size)
    if ys.size == 0:
        raise ValidationError("no grid point survives the pole removal")
    theta = np.linspace(0.0, 2 * np.pi, grid_size, endpoint=False)
    xs = float(dom.rho) * np.exp(1j * theta)
    c = family(n)
    if c.d != 1 or c.e != 1:
        raise ValidationError("convergence report handles d = e = 1 families")
    diff = np.zeros((xs.size, ys.size), dtype=complex)
    for index, coeff in c.equations[0].items():
        k = index[0]
        if k <= m:
            continue
        diff += np.outer(xs ** k, coeff.evaluate_numeric(ys))
    sup = float(np.max(np.abs(diff))) if m < n else 0.0
    bound = tail_bound(m, dom.rho, dom.alpha_exp)
    return ConvergenceReport(dom, (m, n), bound, sup, int(xs.size * ys.size))
