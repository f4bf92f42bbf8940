"""Reference-value checks run by ``birkhoff-kit verify``."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .birkhoff_solver import birkhoff_limit, birkhoff_poly, undetermined_coefficients_oracle
from .correspondence import Correspondence, clear_denominators, poincare_system
from .domain_geometry import PoleDiskDomain, convergence_report, tail_bound
from .exact_algebra import TruncatedSeries
from .span_lab import kms_certificate, span_chain, torsion_index


@dataclass
class Check:
    name: str
    expected: str
    computed: str
    ok: bool
    seconds: float = 0.0
    note: str = ""

    def to_json(self) -> dict:
        out = {"name": self.name, "expected": self.expected, "computed": self.computed,
               "ok": self.ok, "seconds": round(self.seconds, 4)}
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Report:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_json(self) -> dict:
        return {"suite": self.suite, "ok": self.ok,
                "passed": sum(c.ok for c in self.checks), "total": len(self.checks),
                "checks": [c.to_json() for c in self.checks]}

    def format(self) -> str:
        lines = [f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.computed}"
                 + (f"  [{c.note}]" if c.note else "") for c in self.checks]
        lines.append(f"{sum(c.ok for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


GOLDEN_B = {
    3: [0, 1, 0, 0, 0, 2, -14, 64],
    4: [0, 1, 0, 0, 1, -3, 7, -19],
    5: [0, 1, 0, 0, 1, -2, 1, 12],
    6: [0, 1, 0, 0, 1, -2, 2, 5],
}
GOLDEN_LIMIT = [0, 1, 0, 0, 1, -2, 2, 6, -35, 86]


def _series(coeffs) -> TruncatedSeries:
    return TruncatedSeries(1, {(k,): c for k, c in enumerate(coeffs) if c})


def _fmt(coeffs) -> str:
    return _series(coeffs).format(["x"])


def torsion_example_map() -> list[TruncatedSeries]:
    x = TruncatedSeries.variable(0, 1)
    return [1 + x, x ** 3, x ** 100, x + x ** 3 + x ** 100]


def synthetic_family(n: int):
    """n-correspondence truncating ``y = (x, x^2, x + x^2)``."""
    y = [TruncatedSeries.variable(j, 3) for j in range(3)]
    eqs = [{(0,): -y[0], (1,): 1}, {(0,): -y[1], (2,): 1}, {(0,): -y[2], (1,): 1, (2,): 1}]
    eqs = [{i: c for i, c in eq.items() if i[0] <= n} for eq in eqs]
    return Correspondence(1, 3, n, tuple(eqs))


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def reference_values() -> Report:
    report = Report("paper-values")
    add = report.checks.append

    for n, want in GOLDEN_B.items():
        (b, oracle), dt = _timed(lambda: (birkhoff_poly(poincare_system(n), 7),
                                          undetermined_coefficients_oracle(poincare_system(n), 7)))
        got = b.coefficients()
        note = "" if got == oracle.coefficients() else "newton and oracle disagree"
        add(Check(f"b_{n} to degree 7", _fmt(want), _fmt(got),
                  got == want and not note, dt, note))

    lim, dt = _timed(lambda: birkhoff_limit(poincare_system, 9))
    add(Check("limit series to degree 9", _fmt(GOLDEN_LIMIT), _fmt(lim.coefficients()),
              lim.coefficients() == GOLDEN_LIMIT, dt))

    def consistency():
        bs = [birkhoff_poly(poincare_system(n), 14) for n in range(14)]
        return [n for n in range(13)
                if (bs[n + 1].components[0] - bs[n].components[0]).valuation() <= n]
    bad, dt = _timed(consistency)
    add(Check("b_(n+1) - b_n = o(x^n), n <= 12", "no violations",
              f"violations at n={bad}" if bad else "no violations", not bad, dt))

    y = TruncatedSeries.variable(0, 1)
    want_d3 = (1 + y) * (1 + y.scale(2)) * (1 + y.scale(3))
    d3 = clear_denominators(poincare_system(3)).denominator
    add(Check("common denominator D_3", want_d3.format(["y"]), d3.format(["y"]), d3 == want_d3))

    chain, dt = _timed(lambda: torsion_index(torsion_example_map(), None, 100))
    s = chain.spans
    shape_ok = chain.tau == 100 and s[1] == s[2] and all(s[3] == s[k] for k in range(3, 100)) \
        and s[99] != s[100]
    add(Check("torsion index of (1+x, x^3, x^100, x+x^3+x^100)", "tau = 100",
              f"tau = {chain.tau}, jumps at {chain.jumps()}", shape_ok, dt))
    hyper = chain.stable.describe()
    add(Check("stable hyperplane [g]_100", "{y1 + y2 + y3 - y4 = 1}", hyper,
              hyper == "{y1 + y2 + y3 - y4 = 1}",
              note="reference text prints the constant with the opposite sign"))

    sc, dt = _timed(lambda: span_chain(synthetic_family, 5))
    w_ok = sc.rho == 2 and sc.w_inf.describe() == "{y1 + y2 - y3 = 0}"
    add(Check("span chain for y = (x, x^2, x + x^2)", "rho = 2, W = {y1 + y2 - y3 = 0}",
              f"rho = {sc.rho}, W = {sc.w_inf.describe()}", w_ok, dt))
    cert = kms_certificate(birkhoff_poly(synthetic_family(5), 5), sc.w_inf)
    add(Check("KMS certificate", "(2, True)", f"({cert.l}, {cert.ok})",
              cert == (2, True)))

    tb = tail_bound(0, Fraction(1, 2), 3)
    add(Check("tail bound sum k^2 2^-k", "[6, 6 + 1e-6]", repr(tb), 6 <= tb <= 6 + 1e-6))
    rep, dt = _timed(lambda: convergence_report(
        poincare_system, PoleDiskDomain(Fraction(1, 2), Fraction(3, 4), 3), 50, 5, 15))
    add(Check("convergence report rho=1/2 eta=3/4 m=5 n=15", "sup <= bound",
              f"sup = {rep.sampled_sup:.6g}, bound = {rep.analytic_bound:.6g}", rep.verdict, dt))
    return report


SUITES = {"paper-values": reference_values}
