"""Command-line interface: ``birkhoff-kit <command> [options]``.

Exit status: 0 success, 1 invalid input, 2 computation error (pole, singular
Jacobian, ...), 3 verification failure.  Errors are printed to stderr as a
single JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .birkhoff_solver import birkhoff_poly, undetermined_coefficients_oracle
from .correspondence import (
    Correspondence,
    clear_denominators,
    local_series,
    poincare_system,
    truncation_family,
    x_names,
    y_names,
)
from .domain_geometry import (
    PoleDiskDomain,
    ResonanceTubeDomain,
    diophantine_margin,
    pole_margin,
    pole_membership,
    tube_membership,
)
from .errors import BirkhoffKitError, ComputationError, ValidationError
from .exact_algebra import ExactScalar, TruncatedSeries, parse_polynomial, scalar
from .span_lab import relative_jet_span, span_chain, torsion_index
from .tracer import emit_plot, grid_eval, marching_squares, poincare_curve
from .verification import SUITES, torsion_example_map

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3


# configuration -----------------------------------------------------------------

def _nat(v, name):
    if isinstance(v, bool) or int(v) != v or v < 0:
        raise ValidationError(f"{name} must be a non-negative integer")
    return int(v)


def _pos_nat(v, name):
    v = _nat(v, name)
    if v == 0:
        raise ValidationError(f"{name} must be positive")
    return v


def _rational(v, name):
    try:
        return Fraction(str(v))
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"{name} must be a rational number such as 0.5 or 1/2") from None


def _choice(*options):
    def check(v, name):
        if v not in options:
            raise ValidationError(f"{name} must be one of {', '.join(options)}")
        return v
    return check


def _any(v, name):
    return v


def _point(v, name):
    if v is None or v == "0" or v == 0 or v == ["0"]:
        return None
    items = v if isinstance(v, (list, tuple)) else str(v).replace(",", " ").split()
    try:
        return [scalar(str(t)) for t in items]
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"{name} must be a list of Gaussian rationals") from None


def _floats(count):
    def check(v, name):
        if len(v) != count:
            raise ValidationError(f"{name} needs {count} numbers")
        return [float(t) for t in v]
    return check


def _ints(count):
    def check(v, name):
        if len(v) != count:
            raise ValidationError(f"{name} needs {count} integers")
        return [_nat(t, name) for t in v]
    return check


SCHEMA: dict[str, dict[str, Callable]] = {
    "poincare": {"n": _nat, "emit": _choice("cleared", "local", "system"), "order": _nat},
    "solve": {"system": _any, "poincare_n": _nat, "order": _nat,
              "method": _choice("newton", "undetermined"), "emit": _choice("json", "text")},
    "span": {"system": _any, "poincare_n": _nat, "point": _point, "max_order": _nat,
             "chain": _any},
    "torsion": {"component": _any, "map": _any, "example": _choice("tau100"),
                "point": _point, "max_order": _nat, "emit": _choice("json", "text")},
    "domain": {"kind": _choice("poincare", "tubes"), "rho": _rational, "eta": _rational,
               "alpha": _rational, "n": _nat, "grid": _pos_nat, "e": _pos_nat, "c": _rational,
               "gamma": _rational, "sample": _pos_nat, "seed": _nat,
               "emit": _choice("csv", "json")},
    "trace": {"poincare_n": _nat, "poly": _any, "window": _floats(4), "res": _ints(2),
              "shade_n": _nat},
    "verify": {"suite": _choice(*SUITES), "emit": _choice("json", "text")},
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output_path: str | None = None
    format: str | None = None
    threads: int = 1

    def validate(self) -> "RunConfig":
        if self.command not in SCHEMA:
            raise ValidationError(f"unknown command {self.command!r}")
        schema = SCHEMA[self.command]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise ValidationError(f"unknown parameter(s) for {self.command}: {', '.join(unknown)}")
        clean = {}
        for key, value in self.params.items():
            clean[key] = None if value is None else schema[key](value, key)
        self.params = clean
        self.threads = _pos_nat(self.threads, "threads")
        return self

    @classmethod
    def from_mapping(cls, obj: dict) -> "RunConfig":
        allowed = {"command", "params", "output_path", "format", "threads"}
        unknown = sorted(set(obj) - allowed)
        if unknown:
            raise ValidationError(f"unknown config key(s): {', '.join(unknown)}")
        if "command" not in obj:
            raise ValidationError("config needs a 'command'")
        return cls(obj["command"], dict(obj.get("params", {})), obj.get("output_path"),
                   obj.get("format"), obj.get("threads", 1)).validate()


# helpers -----------------------------------------------------------------------

def _read_json(path) -> Any:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _load_system(params) -> Correspondence:
    if params.get("system") is not None:
        return Correspondence.from_json(_read_json(params["system"]))
    if params.get("poincare_n") is not None:
        return poincare_system(params["poincare_n"])
    raise ValidationError("give --system FILE or --poincare-n N")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _write(text: str, path: str | None, out) -> None:
    if path in (None, "-"):
        out.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# commands ----------------------------------------------------------------------

def _cmd_poincare(cfg: RunConfig, out) -> int:
    p = cfg.params
    n = p.get("n", 6)
    c = poincare_system(n)
    emit = p.get("emit") or "cleared"
    if emit == "system":
        payload = c.to_json()
    elif emit == "cleared":
        payload = clear_denominators(c).to_json()
    else:
        order = p.get("order")
        order = n if order is None else order
        names = x_names(1) + y_names(1)
        payload = {"order": order, "series": [s.to_json(names) for s in local_series(c, order)]}
    if cfg.format == "text":
        text = c.format() if emit == "system" else (
            "\n".join(f"P = {q.format(['x', 'y'])}" for q in clear_denominators(c).polynomials)
            if emit == "cleared" else
            "\n".join(s.format(["x", "y"]) for s in local_series(c, payload["order"])))
        _write(text + "\n", cfg.output_path, out)
    else:
        _write(_dump(payload), cfg.output_path, out)
    return EXIT_OK


def _cmd_solve(cfg: RunConfig, out) -> int:
    p = cfg.params
    c = _load_system(p)
    order = p.get("order", 7)
    method = p.get("method") or "newton"
    b = birkhoff_poly(c, order) if method == "newton" else undetermined_coefficients_oracle(c, order)
    emit = p.get("emit") or cfg.format or "json"
    _write(b.format() + "\n" if emit == "text" else _dump(b.to_json()), cfg.output_path, out)
    return EXIT_OK


def _cmd_span(cfg: RunConfig, out) -> int:
    p = cfg.params
    c = _load_system(p)
    point = p.get("point")
    top = p.get("max_order")
    top = c.degree if top is None else top
    spans = [relative_jet_span(c, point, m) for m in range(top + 1)]
    tau = next(m for m in range(top + 1) if all(s == spans[m] for s in spans[m:]))
    payload = {"point": None if point is None else [str(v) for v in point],
               "relative_chain": [{"m": m, "describe": s.describe(), **s.to_json()}
                                  for m, s in enumerate(spans)],
               "stable_from": tau}
    if p.get("chain"):
        sc = span_chain(truncation_family(c), top)
        payload["span_chain"] = {**sc.to_json(), "w_inf_describe": sc.w_inf.describe()}
    _write(_dump(payload), cfg.output_path, out)
    return EXIT_OK


def _cmd_torsion(cfg: RunConfig, out) -> int:
    p = cfg.params
    if p.get("example") == "tau100":
        comps = torsion_example_map()
    elif p.get("component"):
        exprs = p["component"]
        names = x_names(_arity(exprs))
        comps = [parse_polynomial(s, names) for s in exprs]
    elif p.get("map"):
        raw = _read_json(p["map"])
        raw = raw.get("components", raw) if isinstance(raw, dict) else raw
        comps = [TruncatedSeries.from_json(s).with_order(None) for s in raw]
    else:
        raise ValidationError("give --component EXPR (repeatable), --map FILE or --example tau100")
    chain = torsion_index(comps, p.get("point"), p.get("max_order"))
    if (p.get("emit") or cfg.format) == "text":
        lines = [f"tau = {chain.tau}", f"jumps at m = {chain.jumps()}",
                 f"stable span: {chain.stable.describe()}"]
        _write("\n".join(lines) + "\n", cfg.output_path, out)
    else:
        payload = {"tau": chain.tau, "jumps": chain.jumps(),
                   "dims": [s.dim for s in chain.spans],
                   "stable_describe": chain.stable.describe(), "stable": chain.stable.to_json()}
        _write(_dump(payload), cfg.output_path, out)
    return EXIT_OK


def _arity(exprs) -> int:
    import re

    used = set(re.findall(r"\bx(\d+)\b", " ".join(exprs)))
    return max((int(k) for k in used), default=1)


def _cmd_domain(cfg: RunConfig, out) -> int:
    p = cfg.params
    kind = p.get("kind") or "poincare"
    emit = p.get("emit") or cfg.format or "csv"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if kind == "poincare":
        dom = PoleDiskDomain(p.get("rho", Fraction(1, 2)), p.get("eta", Fraction(3, 4)),
                             p.get("alpha", 3), p.get("n", 20))
        g = p.get("grid", 200)
        eta = Fraction(dom.eta)
        # exact nodes, so points on a boundary circle are decided exactly
        t = [eta * (Fraction(2 * i, g - 1) - 1) for i in range(g)] if g > 1 else [Fraction(0)]
        rows = []
        for im in t:
            for re_ in t:
                y = ExactScalar(re_, im)
                rows.append((float(re_), float(im), pole_membership(dom, 0, y), pole_margin(dom, y)))
        header = ["y_re", "y_im", "member", "margin"]
        summary = {"kind": "poincare", "points": len(rows), "members": sum(r[2] for r in rows)}
    else:
        e = p.get("e", 2)
        dom = ResonanceTubeDomain(e, p.get("n", 5), p.get("c", Fraction(1, 10)),
                                  p.get("gamma", 3))
        rng = np.random.default_rng(p.get("seed", 0))
        ys = rng.uniform(-1.0, 1.0, size=(p.get("sample", 10000), e))
        rows = [(*map(float, y), tube_membership(dom, list(y)), diophantine_margin(dom, list(y)))
                for y in ys]
        header = [f"y{i + 1}" for i in range(e)] + ["member", "margin"]
        summary = {"kind": "tubes", "points": len(rows), "members": sum(r[-2] for r in rows)}
    if emit == "json":
        _write(_dump(summary), cfg.output_path, out)
        return EXIT_OK
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else int(v) for v in r[:-2]]
                   + [int(r[-2]), repr(float(r[-1]))])
    _write(buf.getvalue(), cfg.output_path, out)
    return EXIT_OK


def _cmd_trace(cfg: RunConfig, out) -> int:
    p = cfg.params
    if p.get("poly"):
        P = parse_polynomial(p["poly"], ["x", "y"])
    else:
        P = poincare_curve(p.get("poincare_n", 5))
    window = p.get("window") or [-1.0, 1.0, -1.0, 1.0]
    res = p.get("res") or [800, 800]
    grid = grid_eval(P, window, res, threads=cfg.threads)
    lines = marching_squares(grid)
    shade = p.get("shade_n")
    region = PoleDiskDomain(Fraction(1, 2), 1, 3, shade) if shade else None
    path = cfg.output_path
    if path in (None, "-"):
        raise ValidationError("trace needs an output file (--emit FILE.svg|FILE.csv)")
    emit_plot(lines, path, region, cfg.format, window)
    out.write(_dump({"output": str(path), "polylines": len(lines),
                     "vertices": sum(len(l) for l in lines)}))
    return EXIT_OK


def _cmd_verify(cfg: RunConfig, out) -> int:
    suite = cfg.params.get("suite") or "paper-values"
    report = SUITES[suite]()
    emit = cfg.params.get("emit") or cfg.format or "text"
    _write(report.format() + "\n" if emit == "text" else _dump(report.to_json()),
           cfg.output_path, out)
    return EXIT_OK if report.ok else EXIT_VERIFY


COMMANDS = {"poincare": _cmd_poincare, "solve": _cmd_solve, "span": _cmd_span,
            "torsion": _cmd_torsion, "domain": _cmd_domain, "trace": _cmd_trace,
            "verify": _cmd_verify}


def run(config: RunConfig, out=None) -> int:
    """Execute a validated configuration and return the exit status."""
    config.validate()
    return COMMANDS[config.command](config, out or sys.stdout)


# argument parsing ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation status and a JSON payload."""

    def error(self, message):
        self.exit(EXIT_INVALID, json.dumps({"error": "validation", "message": message,
                                            "exit_code": EXIT_INVALID}) + "\n")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="birkhoff-kit",
                 description="Birkhoff polynomials, jet spans and domain bounds.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: $BIRKHOFF_THREADS or 1)")
    ap.add_argument("--config", help="JSON run configuration; replaces the subcommand")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("poincare", help="the Poincare family f_n")
    s.add_argument("--n", type=int, default=6)
    s.add_argument("--emit", choices=["cleared", "local", "system"], default="cleared")
    s.add_argument("--order", type=int)
    s.add_argument("--format", choices=["json", "text"], default="json")
    s.add_argument("--out")

    s = sub.add_parser("solve", help="Birkhoff polynomial of a correspondence")
    s.add_argument("--system")
    s.add_argument("--poincare-n", type=int)
    s.add_argument("--order", type=int, default=7)
    s.add_argument("--method", choices=["newton", "undetermined"], default="newton")
    s.add_argument("--emit", choices=["json", "text"], default="json")
    s.add_argument("--out")

    s = sub.add_parser("span", help="relative jet-span chain at a point")
    s.add_argument("--system")
    s.add_argument("--poincare-n", type=int)
    s.add_argument("--point", nargs="+", default=None)
    s.add_argument("--max-order", type=int)
    s.add_argument("--chain", action="store_true", help="also the span chain of truncations")
    s.add_argument("--emit", metavar="FILE", help="output file (default stdout)")

    s = sub.add_parser("torsion", help="jet-span chain and torsion index of a polynomial map")
    s.add_argument("--component", action="append", help="polynomial in x or x1..xd")
    s.add_argument("--map", help="JSON list of series")
    s.add_argument("--example", choices=["tau100"])
    s.add_argument("--point", nargs="+", default=None)
    s.add_argument("--max-order", type=int)
    s.add_argument("--emit", choices=["json", "text"], default="json")
    s.add_argument("--out")

    s = sub.add_parser("domain", help="membership of shrinking domains")
    s.add_argument("kind", choices=["poincare", "tubes"])
    s.add_argument("--rho", default="1/2")
    s.add_argument("--eta", default="3/4")
    s.add_argument("--alpha", default="3")
    s.add_argument("--n", type=int)
    s.add_argument("--grid", type=int, default=200)
    s.add_argument("--e", type=int, default=2)
    s.add_argument("--c", default="1/10")
    s.add_argument("--gamma", default="3")
    s.add_argument("--sample", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--emit", choices=["csv", "json"], default="csv")
    s.add_argument("--out")

    s = sub.add_parser("trace", help="trace a real curve P(x, y) = 0")
    s.add_argument("--poincare-n", type=int)
    s.add_argument("--poly", help="polynomial in x and y instead of P_n")
    s.add_argument("--window", nargs=4, type=float, default=[-1.0, 1.0, -1.0, 1.0])
    s.add_argument("--res", nargs=2, type=int, default=[800, 800])
    s.add_argument("--shade-n", type=int, help="shade the pole bands y = -1/k for k <= N")
    s.add_argument("--emit", metavar="FILE", required=True, help="output .svg or .csv")

    s = sub.add_parser("verify", help="run a reference-value suite")
    s.add_argument("--suite", choices=sorted(SUITES), default="paper-values")
    s.add_argument("--emit", choices=["json", "text"], default="text")
    s.add_argument("--out")
    return ap


def _config_from_args(ns: argparse.Namespace) -> RunConfig:
    args = {k: v for k, v in vars(ns).items() if k not in ("command", "threads", "config")}
    output = args.pop("out", None)
    fmt = args.pop("format", None)
    if ns.command in ("span", "trace"):
        output = args.pop("emit", None)
        if ns.command == "trace":
            fmt = Path(output).suffix.lstrip(".").lower() or None
    if ns.command == "domain" and args.get("n") is None:
        args["n"] = 20 if args["kind"] == "poincare" else 5
    params = {k: v for k, v in args.items() if v is not None and v is not False}
    return RunConfig(ns.command, params, output, fmt)


def _threads(ns) -> int:
    if ns.threads is not None:
        return ns.threads
    env = os.environ.get("BIRKHOFF_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError("BIRKHOFF_THREADS must be an integer") from None
    return 1


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    ap = _parser()
    ns = ap.parse_args(argv)
    try:
        if ns.config:
            cfg = RunConfig.from_mapping(_read_json(ns.config))
        elif ns.command is None:
            ap.print_help(sys.stderr)
            return EXIT_INVALID
        else:
            cfg = _config_from_args(ns)
        if ns.threads is not None or not ns.config:
            cfg.threads = _threads(ns)
        return run(cfg)
    except FileNotFoundError as exc:
        return _fail(EXIT_INVALID, "file not found", str(exc).strip("'\""))
    except ValidationError as exc:
        return _fail(EXIT_INVALID, "validation", str(exc))
    except ComputationError as exc:
        return _fail(EXIT_COMPUTE, type(exc).__name__, str(exc))
    except ZeroDivisionError as exc:
        return _fail(EXIT_COMPUTE, "PoleError", str(exc))
    except BirkhoffKitError as exc:
        return _fail(EXIT_COMPUTE, type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail(EXIT_INVALID, "io", str(exc))


if __name__ == "__main__":
    sys.exit(main())
