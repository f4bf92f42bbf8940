"""
Jet spans and the torsion index
===============================

The affine span of the first m Taylor coefficients of a polynomial map can stay
flat for a long time before it jumps.
"""

from birkhoff_kit import TruncatedSeries, torsion_index
from birkhoff_kit.span_lab import image_span_sample, jet_span_map
from fractions import Fraction

x = TruncatedSeries.variable(0, 1)
g = [1 + x, x ** 3, x ** 100, x + x ** 3 + x ** 100]

chain = torsion_index(g, None, 100)
print("torsion index:", chain.tau)
print("dimension jumps at orders:", chain.jumps())
print("stable span:", chain.stable.describe())

for m in (0, 1, 2, 3, 99, 100):
    print(f"  m={m:3d}  dim={jet_span_map(g, None, m).dim}")

# sampling the image gives the same hyperplane
samples = [[Fraction(k, 7)] for k in range(1, 6)]
print("sampled image span:", image_span_sample(g, samples).describe())
