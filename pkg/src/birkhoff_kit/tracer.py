"""Real-slice tracing of polynomial curves ``P(x, y) = 0``.

Node values are computed exactly over the integers and rounded to float
once.  Contours come from marching squares with linear interpolation on
sign-change edges; saddle cells are resolved by the exact value at the cell
centre.  Output is plain SVG or CSV and is byte-for-byte deterministic.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .correspondence import clear_denominators, poincare_system
from .domain_geometry import PoleDiskDomain, ResonanceTubeDomain, lattice_vectors
from .errors import ValidationError
from .exact_algebra import TruncatedSeries


@dataclass(frozen=True)
class TraceGrid:
    """Node values ``values[j, i] = P(x_i, y_j)``."""

    window: tuple
    resolution: tuple
    values: np.ndarray = field(repr=False)
    poly: TruncatedSeries = field(repr=False)
    x_nodes: tuple = field(repr=False)
    y_nodes: tuple = field(repr=False)

    @property
    def xs(self) -> np.ndarray:
        return np.array([float(v) for v in self.x_nodes])

    @property
    def ys(self) -> np.ndarray:
        return np.array([float(v) for v in self.y_nodes])

    @property
    def cell_size(self) -> tuple[float, float]:
        x0, x1, y0, y1 = self.window
        nx, ny = self.resolution
        return (x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1)

    @property
    def cell_diagonal(self) -> float:
        return math.hypot(*self.cell_size)


@dataclass(frozen=True)
class Polyline:
    points: tuple
    closed: bool = False

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float).reshape(-1, 2)


def poincare_curve(n: int) -> TruncatedSeries:
    """The cleared Poincare polynomial ``P_n(x, y)``."""
    return clear_denominators(poincare_system(n)).polynomials[0]


def _nodes(lo, hi, count: int) -> list[Fraction]:
    lo, hi = Fraction(lo), Fraction(hi)
    step = (hi - lo) / (count - 1)
    return [lo + step * k for k in range(count)]


def _check_window(window, resolution):
    if len(window) != 4 or len(resolution) != 2:
        raise ValidationError("window is (x_min, x_max, y_min, y_max), resolution is (nx, ny)")
    x0, x1, y0, y1 = (float(v) for v in window)
    if not all(math.isfinite(v) for v in (x0, x1, y0, y1)):
        raise ValidationError("window must be finite")
    if not (x0 < x1 and y0 < y1):
        raise ValidationError("degenerate window")
    nx, ny = resolution
    if int(nx) != nx or int(ny) != ny or nx < 2 or ny < 2:
        raise ValidationError("resolution must be at least 2 x 2")


def _integer_coefficients(poly: TruncatedSeries):
    """Integer matrix ``C`` and scale ``L`` with ``P = sum C[p, q] x^p y^q / L``."""
    if poly.num_vars != 2:
        raise ValidationError("tracing needs a polynomial in (x, y)")
    terms = list(poly.items())
    for _, c in terms:
        if not isinstance(c, (int, Fraction)):
            raise ValidationError("tracing needs real coefficients")
    px = max((i[0] for i, _ in terms), default=0)
    py = max((i[1] for i, _ in terms), default=0)
    scale = lcm(*(Fraction(c).denominator for _, c in terms)) if terms else 1
    C = np.zeros((px + 1, py + 1), dtype=object)
    C[:, :] = 0
    for (p, q), c in terms:
        C[p, q] = int(Fraction(c) * scale)
    return C, scale, px, py


def _power_table(nodes: Sequence[Fraction], degree: int):
    """Rows ``[N_k^p D^(degree - p)]`` with ``N_k / D`` the node; returns (table, D)."""
    den = lcm(*(v.denominator for v in nodes))
    nums = [int(v * den) for v in nodes]
    T = np.empty((len(nodes), degree + 1), dtype=object)
    for k, a in enumerate(nums):
        for p in range(degree + 1):
            T[k, p] = a ** p * den ** (degree - p)
    return T, den


def grid_eval(P: TruncatedSeries, window, resolution, threads: int = 1) -> TraceGrid:
    """Evaluate ``P`` on the node grid exactly, rounding each value once."""
    _check_window(window, resolution)
    nx, ny = int(resolution[0]), int(resolution[1])
    P = P.with_order(None)
    x_nodes = _nodes(window[0], window[1], nx)
    y_nodes = _nodes(window[2], window[3], ny)
    C, scale, px, py = _integer_coefficients(P)
    X, dx = _power_table(x_nodes, px)
    Y, dy = _power_table(y_nodes, py)
    denom = scale * dx ** px * dy ** py
    right = C.dot(Y.T)  # (px+1, ny)

    def rows(block: range) -> np.ndarray:
        ints = X.dot(right[:, block.start:block.stop]).T
        out = np.empty(ints.shape, dtype=float)
        flat = ints.ravel()
        out.ravel()[:] = [v / denom for v in flat]
        return out

    threads = max(1, int(threads))
    chunk = max(1, -(-ny // threads))
    blocks = [range(s, min(ny, s + chunk)) for s in range(0, ny, chunk)]
    if threads == 1:
        parts = [rows(b) for b in blocks]
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(rows, blocks))
    values = np.vstack(parts)
    win = tuple(float(v) for v in window)
    return TraceGrid(win, (nx, ny), values, P, tuple(x_nodes), tuple(y_nodes))


# marching squares ------------------------------------------------------------

def _crossing(grid: TraceGrid, edge) -> tuple[float, float]:
    kind, i, j = edge
    v = grid.values
    x0, y0 = float(grid.x_nodes[i]), float(grid.y_nodes[j])
    if kind == "h":
        a, b = v[j, i], v[j, i + 1]
        t = a / (a - b)
        x1 = float(grid.x_nodes[i + 1])
        return (float(x0 + t * (x1 - x0)), y0)
    a, b = v[j, i], v[j + 1, i]
    t = a / (a - b)
    y1 = float(grid.y_nodes[j + 1])
    return (x0, float(y0 + t * (y1 - y0)))


def _cell_segments(grid: TraceGrid, i: int, j: int, pos: np.ndarray):
    bottom, top = ("h", i, j), ("h", i, j + 1)
    left, right = ("v", i, j), ("v", i + 1, j)
    s00, s10, s11, s01 = pos[j, i], pos[j, i + 1], pos[j + 1, i + 1], pos[j + 1, i]
    crossed = [e for e, (a, b) in ((bottom, (s00, s10)), (right, (s10, s11)),
                                   (top, (s01, s11)), (left, (s00, s01))) if a != b]
    if len(crossed) == 2:
        return [tuple(crossed)]
    if len(crossed) == 4:
        cx = (grid.x_nodes[i] + grid.x_nodes[i + 1]) / 2
        cy = (grid.y_nodes[j] + grid.y_nodes[j + 1]) / 2
        centre = grid.poly.evaluate([cx, cy]) > 0
        if centre == s00:
            return [(bottom, right), (top, left)]
        return [(bottom, left), (top, right)]
    return []


def marching_squares(grid: TraceGrid) -> list[Polyline]:
    """Zero set of the grid as polylines, chained through shared cell edges."""
    pos = grid.values > 0
    ny, nx = pos.shape
    mixed = (pos[:-1, :-1] != pos[:-1, 1:]) | (pos[:-1, :-1] != pos[1:, :-1]) \
        | (pos[:-1, :-1] != pos[1:, 1:])
    links: dict = {}
    for j, i in zip(*np.nonzero(mixed)):
        for a, b in _cell_segments(grid, int(i), int(j), pos):
            links.setdefault(a, []).append(b)
            links.setdefault(b, []).append(a)
    if not links:
        return []
    points = {e: _crossing(grid, e) for e in links}
    used: set = set()

    def walk(start) -> list:
        chain = [start]
        used.add(start)
        cur = start
        while True:
            nxt = [e for e in links[cur] if e not in used]
            if not nxt:
                return chain
            cur = nxt[0]
            used.add(cur)
            chain.append(cur)

    out = []
    for edge in sorted(e for e in links if len(links[e]) == 1):
        if edge not in used:
            out.append(Polyline(tuple(points[e] for e in walk(edge)), False))
    for edge in sorted(links):
        if edge not in used:
            chain = walk(edge)
            closed = chain[0] in links[chain[-1]] and len(chain) > 2
            out.append(Polyline(tuple(points[e] for e in chain), closed))
    return out


# checks ----------------------------------------------------------------------

def _local_gradient(grid: TraceGrid, x: float, y: float) -> float:
    """Max finite-difference gradient norm over the cells around ``(x, y)``."""
    hx, hy = grid.cell_size
    x0, _, y0, _ = grid.window
    nx, ny = grid.resolution
    i = min(max(int((x - x0) / hx), 0), nx - 2)
    j = min(max(int((y - y0) / hy), 0), ny - 2)
    i0, i1 = max(i - 1, 0), min(i + 2, nx - 1)
    j0, j1 = max(j - 1, 0), min(j + 2, ny - 1)
    block = grid.values[j0:j1 + 1, i0:i1 + 1]
    gx = np.abs(np.diff(block, axis=1)).max(initial=0.0) / hx
    gy = np.abs(np.diff(block, axis=0)).max(initial=0.0) / hy
    return float(math.hypot(gx, gy))


def residual_ratios(grid: TraceGrid, polylines: Iterable[Polyline]) -> np.ndarray:
    """``|P(v)| / (h * G_local(v))`` for every vertex; soundness means all are ``<= 4``."""
    pts = [p for line in polylines for p in line.points]
    if not pts:
        return np.zeros(0)
    arr = np.array(pts)
    vals = np.abs(grid.poly.evaluate_numeric(arr[:, 0].astype(complex), arr[:, 1].astype(complex)))
    h = grid.cell_diagonal
    grads = np.array([_local_gradient(grid, x, y) for x, y in pts])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(vals == 0, 0.0, vals / (h * grads))
    return ratios


def hausdorff(a: Iterable[Polyline], b: Iterable[Polyline]) -> float:
    """Symmetric Hausdorff distance between the vertex sets of two traces."""
    pa = np.array([p for line in a for p in line.points]).reshape(-1, 2)
    pb = np.array([p for line in b for p in line.points]).reshape(-1, 2)
    if len(pa) == 0 and len(pb) == 0:
        return 0.0
    if len(pa) == 0 or len(pb) == 0:
        return math.inf
    return max(directed_hausdorff(pa, pb, seed=0)[0], directed_hausdorff(pb, pa, seed=0)[0])


# output ----------------------------------------------------------------------

_CANVAS = 800


def _clip_halfplane(poly: list, a: float, b: float, c: float) -> list:
    """Keep the part of ``poly`` with ``a x + b y <= c``."""
    out = []
    for k, p in enumerate(poly):
        q = poly[(k + 1) % len(poly)]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def removed_shapes(region, window) -> list[list[tuple[float, float]]]:
    """Real-slice pieces of the removed set as polygons in window coordinates."""
    x0, x1, y0, y1 = window
    box = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    shapes = []
    if isinstance(region, PoleDiskDomain):
        top = region.n if region.n is not None else 0
        for k in range(1, top + 1):
            r = math.sqrt(float(region.radius_sq(k)))
            lo, hi = max(-1 / k - r, y0), min(-1 / k + r, y1)
            if lo < hi:
                shapes.append([(x0, lo), (x1, lo), (x1, hi), (x0, hi)])
    elif isinstance(region, ResonanceTubeDomain):
        if region.e != 2:
            raise ValidationError("tube shading needs e = 2")
        for a in lattice_vectors(2, region.n):
            d = region.delta(a)
            piece = _clip_halfplane(box, a[0], a[1], d)
            piece = _clip_halfplane(piece, -a[0], -a[1], d) if piece else []
            if len(piece) >= 3:
                shapes.append(piece)
    elif region is not None:
        raise ValidationError("removed_regions must be a PoleDiskDomain or ResonanceTubeDomain")
    return shapes


def _svg(polylines, shapes, window) -> str:
    x0, x1, y0, y1 = window
    sx = _CANVAS / (x1 - x0)
    sy = _CANVAS / (y1 - y0)

    def pt(p):
        return f"{(p[0] - x0) * sx:.3f},{(y1 - p[1]) * sy:.3f}"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CANVAS}" height="{_CANVAS}" '
        f'viewBox="0 0 {_CANVAS} {_CANVAS}">',
        f'<rect x="0" y="0" width="{_CANVAS}" height="{_CANVAS}" fill="white"/>',
    ]
    if 0.0 > x0 and 0.0 < x1:
        lines.append(f'<line x1="{-x0 * sx:.3f}" y1="0" x2="{-x0 * sx:.3f}" y2="{_CANVAS}" '
                     'stroke="#bbbbbb" stroke-width="0.5"/>')
    if 0.0 > y0 and 0.0 < y1:
        lines.append(f'<line x1="0" y1="{y1 * sy:.3f}" x2="{_CANVAS}" y2="{y1 * sy:.3f}" '
                     'stroke="#bbbbbb" stroke-width="0.5"/>')
    for shape in shapes:
        lines.append(f'<polygon points="{" ".join(pt(p) for p in shape)}" '
                     'fill="#f4a582" fill-opacity="0.35" stroke="none"/>')
    for line in polylines:
        tag = "polygon" if line.closed else "polyline"
        lines.append(f'<{tag} points="{" ".join(pt(p) for p in line.points)}" '
                     'fill="none" stroke="#2166ac" stroke-width="1.2"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def format_csv(polylines: Sequence[Polyline]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["polyline_id", "x", "y"])
    for k, line in enumerate(polylines):
        pts = list(line.points) + ([line.points[0]] if line.closed else [])
        for x, y in pts:
            w.writerow([k, repr(float(x)), repr(float(y))])
    return buf.getvalue()


def parse_csv(text: str) -> list[Polyline]:
    """Inverse of :func:`format_csv`; a repeated first vertex marks a closed curve."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["polyline_id", "x", "y"]:
        raise ValidationError("CSV must start with the header polyline_id,x,y")
    groups: dict[int, list] = {}
    for row in rows[1:]:
        if not row:
            continue
        groups.setdefault(int(row[0]), []).append((float(row[1]), float(row[2])))
    out = []
    for k in sorted(groups):
        pts = groups[k]
        closed = len(pts) > 3 and pts[0] == pts[-1]
        out.append(Polyline(tuple(pts[:-1] if closed else pts), closed))
    return out


def emit_plot(polylines: Sequence[Polyline], path, removed_regions=None, fmt: str | None = None,
              window=None) -> Path:
    """Write an SVG (curves plus shaded removed set) or a CSV of vertices."""
    path = Path(path)
    if fmt is None:
        fmt = path.suffix.lstrip(".").lower() or "svg"
    if fmt not in ("svg", "csv"):
        raise ValidationError("format must be svg or csv")
    if fmt == "csv":
        text = format_csv(polylines)
    else:
        if window is None:
            pts = np.array([p for line in polylines for p in line.points]).reshape(-1, 2)
            window = (-1.0, 1.0, -1.0, 1.0) if len(pts) == 0 else \
                (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())
            if window[0] == window[1] or window[2] == window[3]:
                window = (window[0] - 1, window[1] + 1, window[2] - 1, window[3] + 1)
        window = tuple(float(v) for v in window)
        text = _svg(polylines, removed_shapes(removed_regions, window), window)
    path.write_text(text, encoding="utf-8")
    return path
