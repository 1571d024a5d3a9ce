"""Float32 transformer building blocks: softmax, normalizations, GELU, linear.

Everything here computes in plain float32 and is bitwise deterministic for
identical inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularInputError

_GELU_C = np.float32(0.7978845608028654)  # sqrt(2 / pi)
_GELU_A = np.float32(0.044715)


def softmax_row(y, valid_len: int | None = None) -> np.ndarray:
    """Numerically stabilized softmax over the first ``valid_len`` entries.

    Entries past ``valid_len`` are treated as -inf and come out exactly 0.
    """
    y = np.asarray(y, dtype=np.float32)
    n = y.shape[0]
    if valid_len is None:
        valid_len = n
    if not 1 <= valid_len <= n:
        raise ValueError(f"valid_len must be in [1, {n}], got {valid_len}")
    v = y[:valid_len]
    e = np.exp(v - v.max())
    out = np.zeros(n, dtype=np.float32)
    out[:valid_len] = e / e.sum()
    return out


def rmsnorm(y) -> np.ndarray:
    """Scale ``y`` to squared norm n: sqrt(n) * y / ||y||_2."""
    y = np.asarray(y, dtype=np.float32)
    norm = np.sqrt(np.sum(y * y))
    if norm == 0.0:
        raise SingularInputError("rmsnorm of the zero vector is undefined")
    return np.sqrt(np.float32(y.shape[-1])) * (y / norm)


def layernorm(y, gamma, beta, eps: float = 1e-5) -> np.ndarray:
    """Mean-subtract, variance-normalize, then apply the affine (gamma, beta).

    Operates on the last axis so both single vectors and row batches work.
    """
    y = np.asarray(y, dtype=np.float32)
    gamma = np.asarray(gamma, dtype=np.float32)
    beta = np.asarray(beta, dtype=np.float32)
    mean = y.mean(axis=-1, keepdims=True)
    centered = y - mean
    var = np.mean(centered * centered, axis=-1, keepdims=True)
    return (centered / np.sqrt(var + np.float32(eps))) * gamma + beta


def gelu(y) -> np.ndarray:
    """tanh-form GELU: 0.5 * y * (1 + tanh(sqrt(2/pi) * (y + 0.044715 y^3)))."""
    y = np.asarray(y, dtype=np.float32)
    return np.float32(0.5) * y * (np.float32(1.0) + np.tanh(_GELU_C * (y + _GELU_A * y * y * y)))


def linear(x, w, b=None) -> np.ndarray:
    """Affine map x @ w + b in float32."""
    out = np.asarray(x, dtype=np.float32) @ np.asarray(w, dtype=np.float32)
    if b is not None:
        out = out + np.asarray(b, dtype=np.float32)
    return out
