"""
Birkhoff polynomials of the Poincare family
===========================================

Solve f_n(x, y) = 0 for y = b_n(x) by Newton iteration on jets and watch the
coefficients settle as n grows.
"""

from birkhoff_kit import birkhoff_limit, birkhoff_poly, clear_denominators, poincare_system
from birkhoff_kit.birkhoff_solver import undetermined_coefficients_oracle

for n in range(1, 8):
    b = birkhoff_poly(poincare_system(n), 7)
    print(f"n={n}:", b.format())

# the cleared form of f_2, a polynomial in (x, y)
cl = clear_denominators(poincare_system(2))
print("P_2 =", cl.polynomials[0].format(["x", "y"]))

# the limit series, read off once the family has stabilized up to degree N
print("limit:", birkhoff_limit(poincare_system, 9).format())

# a slow but independent check: solve coefficient by coefficient
c = poincare_system(5)
assert undetermined_coefficients_oracle(c, 7) == birkhoff_poly(c, 7)
