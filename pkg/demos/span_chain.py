"""
Relative spans of truncated correspondences
===========================================

Truncate a correspondence at degree n in x, take the relative span of its
Birkhoff jet, and follow the chain until it stops growing.
"""

from birkhoff_kit import AffineSubspace, birkhoff_poly, kms_certificate, span_chain
from birkhoff_kit.verification import synthetic_family

sc = span_chain(synthetic_family, 6)
for n, s in enumerate(sc.spans):
    print(f"n={n}  dim={s.dim}  {s.describe()}")
print("stabilizes at rho =", sc.rho)

target = AffineSubspace(3, [0, 0, 0], [[1, 0, 1], [0, 1, 1]])
b = birkhoff_poly(synthetic_family(6), 6)
print("KMS certificate:", kms_certificate(b, target))
