"""A tour of the simulated reduced-mantissa formats.

Shows how PS(mu) values relate to float32, where the familiar formats sit
(PS(23) = FP32, PS(10) = TF32 precision, PS(7) = BF16 precision), and how the
rounding error scales with the mantissa width.
"""

import numpy as np

from lamp_infer import BF16, FP32, TF32, FpFormat, round_ps

print("=== Rounding one value across formats ===")
x = np.float32(np.pi)
for fmt in (FP32, TF32, BF16, FpFormat(4), FpFormat(1)):
    r = round_ps(x, fmt)
    print(f"  PS({fmt.mantissa_bits:2d}): {r!r:>12}   |error| = {abs(float(r) - float(x)):.3e}"
          f"   unit roundoff = {fmt.unit_roundoff:.2e}")

print()
print("=== Ties go to the even mantissa ===")
tie = np.float32(1 + 2**-8)  # exactly between 1 and 1 + 2^-7 at 7 mantissa bits
print(f"  round_ps(1 + 2^-8, PS(7))   = {round_ps(tie, BF16)!r}  (even neighbor wins)")
above = np.float32(1 + 3 * 2**-9)
print(f"  round_ps(1 + 3*2^-9, PS(7)) = {round_ps(above, BF16)!r}  (closer to 1 + 2^-7)")

print()
print("=== Mean relative error over random values ===")
rng = np.random.default_rng(0)
vals = (rng.standard_normal(200_000) * 10.0 ** rng.integers(-6, 7, 200_000)).astype(np.float32)
for mu in (2, 4, 7, 10, 14, 18, 23):
    r = round_ps(vals, FpFormat(mu))
    rel = np.abs(r.astype(np.float64) - vals.astype(np.float64)) / np.abs(vals)
    print(f"  PS({mu:2d}): mean {rel.mean():.3e}   max {rel.max():.3e}"
          f"   (half-ulp bound {2.0**-(mu + 1):.3e})")

print()
print("Special values pass through untouched:")
for v in (np.float32(np.inf), np.float32(-np.inf), np.float32(np.nan), np.float32(-0.0)):
    print(f"  {v!r:>14} -> {round_ps(v, FpFormat(3))!r}")
