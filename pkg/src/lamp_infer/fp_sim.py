"""Simulated reduced-mantissa floating-point formats and rounded accumulation.

The "partial single" family PS(mu) keeps the 32-bit float layout (1 sign bit,
8 exponent bits) but only mu explicit mantissa bits, 1 <= mu <= 23. A PS(mu)
value is stored as an ordinary float32 whose dropped mantissa bits have been
rounded away (round-to-nearest, ties to even), so PS(23) is plain float32
while PS(10) and PS(7) have the precision of TF32 and BF16 at float32 range.

Inner products are simulated by multiplying and adding in float32 and
rounding the running accumulator to the target format after every addition.
All functions here are pure and reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SIGN_MASK = np.uint32(0x80000000)
_MAG_MASK = np.uint32(0x7FFFFFFF)
_EXP_MASK = np.uint32(0x7F800000)


@dataclass(frozen=True)
class FpFormat:
    """A float32-range format with ``mantissa_bits`` explicit mantissa bits."""

    mantissa_bits: int

    def __post_init__(self):
        if not 1 <= self.mantissa_bits <= 23:
            raise ValueError(f"mantissa_bits must be in [1, 23], got {self.mantissa_bits}")

    @property
    def unit_roundoff(self) -> float:
        """Half the relative grid spacing, 2**-(mu + 1)."""
        return 2.0 ** -(self.mantissa_bits + 1)


FP32 = FpFormat(23)
TF32 = FpFormat(10)
BF16 = FpFormat(7)


@dataclass(frozen=True)
class MixedDotSpec:
    """How inner products are accumulated: inputs stay float32, every partial
    sum is rounded to ``accumulate_format``."""

    accumulate_format: FpFormat


def _round_bits(values: np.ndarray, mu: int) -> np.ndarray:
    """Round float32 array values to mu mantissa bits, ties to even.

    Works on the raw bit patterns: within a binade the float32 grid is an
    affine image of the integer grid, so nearest-even on the trailing bits of
    the (exponent | mantissa) field is nearest-even on the values, and a
    mantissa carry walks into the exponent exactly like float32 overflow
    (up to +-inf at the top). Infinities and NaNs pass through unchanged.
    """
    if mu == 23:
        return values
    shift = 23 - mu
    bits = np.ascontiguousarray(values).reshape(-1).view(np.uint32)
    mag = bits & _MAG_MASK
    lsb = (mag >> np.uint32(shift)) & np.uint32(1)
    rounded = (mag + np.uint32((1 << (shift - 1)) - 1) + lsb) & np.uint32(
        ~((1 << shift) - 1) & 0xFFFFFFFF
    )
    keep = (bits & _EXP_MASK) == _EXP_MASK
    out = np.where(keep, mag, rounded) | (bits & _SIGN_MASK)
    return out.view(np.float32).reshape(np.shape(values))


def round_ps(x, fmt: FpFormat):
    """Round float32 value(s) to the PS(mu) grid of ``fmt``.

    Total on every float32 input: signed zeros keep their sign, +-inf and NaN
    pass through, and values can round up to +-inf at the top of the exponent
    range exactly as float32 arithmetic would overflow.
    """
    arr = np.asarray(x, dtype=np.float32)
    out = _round_bits(arr, fmt.mantissa_bits)
    if arr.ndim == 0:
        return out[()]
    return out


def rounded_accumulate(products: np.ndarray, fmt: FpFormat) -> np.ndarray:
    """Left-to-right sum over the last axis with a PS(mu) accumulator.

    Each step adds one term in exact float32 arithmetic and then rounds the
    partial sum to ``fmt``. An empty last axis yields +0.0. With mu = 23 this
    is the plain sequential float32 sum, bit for bit.
    """
    products = np.asarray(products, dtype=np.float32)
    acc = np.zeros(products.shape[:-1], dtype=np.float32)
    mu = fmt.mantissa_bits
    if mu == 23:
        for i in range(products.shape[-1]):
            acc = acc + products[..., i]
    else:
        for i in range(products.shape[-1]):
            acc = _round_bits(acc + products[..., i], mu)
    return acc


def mixed_dot(a, b, spec: MixedDotSpec) -> np.float32:
    """Inner product with float32 multiplies and a PS(mu)-rounded accumulator.

    Accumulation order is fixed left to right, so results are bitwise
    deterministic. Empty inputs return +0.0.
    """
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"mixed_dot needs equal-length vectors, got {a.shape} and {b.shape}")
    return rounded_accumulate(a * b, spec.accumulate_format)[()]


def mixed_matmul(a, b, spec: MixedDotSpec, mask=None) -> np.ndarray:
    """Matrix product where each entry is a ``mixed_dot`` of a row and column.

    Entries flagged by ``mask`` (a boolean array of the output shape) are
    instead computed as plain sequential float32 dots, i.e. recomputed in
    full precision.
    """
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"incompatible matmul shapes {a.shape} x {b.shape}")
    out_shape = (a.shape[0], b.shape[1])
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != out_shape:
            raise ValueError(f"mask shape {mask.shape} does not match output {out_shape}")
    products = a[:, None, :] * b.T[None, :, :]
    low = rounded_accumulate(products, spec.accumulate_format)
    if mask is not None and mask.any():
        full = rounded_accumulate(products, FP32)
        low = np.where(mask, full, low)
    return low
