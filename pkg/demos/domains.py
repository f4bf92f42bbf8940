"""
Shrinking domains and tail bounds
=================================

Remove small disks around the poles y = -1/k, bound the tail of the series on
what is left, and compare with sampled values.
"""

from fractions import Fraction

import numpy as np

from birkhoff_kit import PoleDiskDomain, ResonanceTubeDomain, convergence_report, tail_bound
from birkhoff_kit.domain_geometry import diophantine_margin, pole_membership

dom = PoleDiskDomain(Fraction(1, 2), Fraction(3, 4), 3, 10)
for y in (0, Fraction(-1, 2), Fraction(-1, 4), Fraction(1, 3)):
    print(f"y={str(y):>5}  in X_10: {pole_membership(dom, 0, y)}")

print("tail bound, m = 0 :", tail_bound(0, Fraction(1, 2), 3))
print("tail bound, m = 10:", tail_bound(10, Fraction(1, 2), 3))

rep = convergence_report(dom=PoleDiskDomain(Fraction(1, 2), Fraction(3, 4), 3), m=5, n=15)
print(f"sampled sup {rep.sampled_sup:.3e} <= bound {rep.analytic_bound:.3e}: {rep.verdict}")

# resonance tubes in two frequencies
tubes = ResonanceTubeDomain(2, 4, Fraction(1, 10), 3)
rng = np.random.default_rng(0)
ys = rng.uniform(-1, 1, size=(2000, 2))
inside = sum(diophantine_margin(tubes, list(y)) >= 1 for y in ys)
print(f"{inside} of {len(ys)} random frequency vectors avoid the tubes with |a| <= 4")
