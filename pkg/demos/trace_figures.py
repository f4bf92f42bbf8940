"""
Real curves P_n(x, y) = 0
=========================

Trace the cleared Poincare polynomials on [-1, 1]^2 and shade the removed pole
bands.  Writes one SVG per n into the current directory.
"""

import sys

from birkhoff_kit import PoleDiskDomain
from birkhoff_kit.tracer import emit_plot, grid_eval, marching_squares, poincare_curve, residual_ratios
from fractions import Fraction

res = int(sys.argv[1]) if len(sys.argv) > 1 else 400
window = (-1.0, 1.0, -1.0, 1.0)

for n in range(3, 7):
    grid = grid_eval(poincare_curve(n), window, (res, res), threads=4)
    lines = marching_squares(grid)
    out = emit_plot(lines, f"P{n}.svg", PoleDiskDomain(Fraction(1, 2), 1, 3, n), window=window)
    worst = residual_ratios(grid, lines).max(initial=0)
    print(f"{out}: {len(lines)} curves, worst residual ratio {worst:.3f}")
