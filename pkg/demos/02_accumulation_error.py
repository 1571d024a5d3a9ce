"""How a rounded accumulator degrades inner products, and when it stalls.

Every partial sum of a mixed dot product is rounded to PS(mu); once the
running sum is large, small increments fall below half an ulp and vanish.
"""

import numpy as np

from lamp_infer import FP32, FpFormat, MixedDotSpec, mixed_dot, mixed_matmul

rng = np.random.default_rng(1)

print("=== Dot-product error vs accumulator width (k = 512) ===")
a = rng.standard_normal(512).astype(np.float32)
b = rng.standard_normal(512).astype(np.float32)
exact = mixed_dot(a, b, MixedDotSpec(FP32))
for mu in (23, 14, 10, 7, 4, 2):
    got = mixed_dot(a, b, MixedDotSpec(FpFormat(mu)))
    print(f"  PS({mu:2d}) accumulator: {float(got):+.6f}   error {abs(float(got - exact)):.3e}")

print()
print("=== The stalling effect ===")
# after the first large term, 0.5 is below half an ulp of the PS(4) sum
terms = np.array([256.0] + [0.5] * 64, dtype=np.float32)
ones = np.ones_like(terms)
print(f"  sum of [256.0, 0.5 x 64] in PS(4):  {float(mixed_dot(terms, ones, MixedDotSpec(FpFormat(4)))):.1f}")
print(f"  same in float32:                    {float(mixed_dot(terms, ones, MixedDotSpec(FP32))):.1f}")

print()
print("=== Matrix product with selective full-precision entries ===")
m = 6
A = rng.standard_normal((m, 64)).astype(np.float32)
B = rng.standard_normal((64, m)).astype(np.float32)
spec = MixedDotSpec(FpFormat(3))
exact = mixed_matmul(A, B, MixedDotSpec(FP32))
low = mixed_matmul(A, B, spec)
mask = np.zeros((m, m), dtype=bool)
mask[np.arange(m), np.arange(m)] = True  # recompute the diagonal only
mixed = mixed_matmul(A, B, spec, mask=mask)
err_low = np.abs(low - exact)
err_mixed = np.abs(mixed - exact)
print(f"  max |error| everywhere, PS(3):            {err_low.max():.3e}")
print(f"  max |error| on the recomputed diagonal:   {err_mixed[mask].max():.3e}")
print(f"  max |error| off the diagonal (unchanged): {err_mixed[~mask].max():.3e}")
