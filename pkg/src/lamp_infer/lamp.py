"""Selective high-precision recomputation driven by the ensuing operator.

Given a composition f(g(x)) evaluated in low precision, the row-normalized
sensitivity matrix of f bounds how rounding errors in components of g(x) are
amplified. Choosing a sparse set of components to recompute in full precision
so that the masked norm of that matrix drops below a threshold tau is a
binary sparse-selection problem; for softmax, RMS normalization and
elementwise activations it has closed-form or greedy near-optimal solutions.

Two matrix variants are used. With f-values f(y) and Jacobian J evaluated at
the computed point y:

    unweighted: diag(f(y))^-1 J          weighted: diag(f(y))^-1 J diag(y)

All selection arithmetic runs in double precision; only the evaluation of g
is performed in simulated low precision.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import SingularInputError, SizeLimitError
from .fp_sim import FP32, FpFormat, MixedDotSpec, rounded_accumulate

UNWEIGHTED = "unweighted"
WEIGHTED = "weighted"

# Diagonal entries blow up to +inf once |f(y)| drops below this, which forces
# the corresponding component to be selected downstream.
_TINY_DENOMINATOR = 1e-30

_BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True)
class LampMatrix:
    """Sensitivity matrix in dense or structured closed form.

    form is one of 'dense', 'softmax', 'rmsnorm', 'activation'; data holds
    the dense matrix, the probability vector z, the value vector y, or the
    diagonal entries respectively. Structured forms expand via dense().
    """

    form: str
    data: np.ndarray
    kind: str

    @property
    def ncols(self) -> int:
        if self.form == "dense":
            return self.data.shape[1]
        return self.data.shape[0]

    def dense(self) -> np.ndarray:
        if self.form == "dense":
            return self.data
        n = self.data.shape[0]
        if self.form == "softmax":
            return np.eye(n) - np.outer(np.ones(n), self.data)
        if self.form == "rmsnorm":
            y = self.data
            return np.eye(n) - np.outer(np.ones(n), y * y) / np.sum(y * y)
        if self.form == "activation":
            return np.diag(self.data)
        raise ValueError(f"unknown LampMatrix form {self.form!r}")


def lamp_matrix_softmax(z) -> LampMatrix:
    """Unweighted matrix of softmax at probabilities z: I - 1 z^T."""
    z = _as_probability(z)
    return LampMatrix("softmax", z, UNWEIGHTED)


def lamp_matrix_rmsnorm(y) -> LampMatrix:
    """Weighted matrix of RMS normalization at y: I - (1 y^T / ||y||^2) diag(y)."""
    y = np.asarray(y, dtype=np.float64)
    if not np.any(y != 0.0):
        raise SingularInputError("RMS normalization is undefined at the zero vector")
    return LampMatrix("rmsnorm", y, WEIGHTED)


def lamp_matrix_activation(y, phi, dphi, kind: str = UNWEIGHTED) -> LampMatrix:
    """Diagonal matrix of an elementwise activation phi evaluated at y.

    Entries are phi'(y_i) / phi(y_i), times y_i for the weighted kind; where
    |phi(y_i)| vanishes the entry is +inf so it is always selected.
    """
    _check_kind(kind)
    y = np.asarray(y, dtype=np.float64)
    num = np.asarray(dphi(y), dtype=np.float64)
    den = np.asarray(phi(y), dtype=np.float64)
    if kind == WEIGHTED:
        num = num * y
    tiny = np.abs(den) < _TINY_DENOMINATOR
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        diag = np.where(tiny, np.inf, num / np.where(tiny, 1.0, den))
    return LampMatrix("activation", diag, kind)


def lamp_matrix_dense(k, kind: str) -> LampMatrix:
    _check_kind(kind)
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError("dense LampMatrix data must be 2-D")
    return LampMatrix("dense", k, kind)


def masked_norm(K: LampMatrix, q) -> float:
    """Max row sum of |K| over unselected columns: || |K| (1 - q) ||_inf.

    Structured forms use their closed formulas, including the all-but-one
    support case; q = all-ones gives 0.
    """
    q = _as_mask(q, K.ncols)
    if K.form == "dense":
        return float(np.max(np.abs(K.data) @ (~q).astype(np.float64), initial=0.0))
    if K.form == "activation":
        rest = np.abs(K.data[~q])
        return float(rest.max()) if rest.size else 0.0
    if K.form == "softmax":
        return _structured_masked_norm(K.data, q)
    if K.form == "rmsnorm":
        y = K.data
        ss = y * y
        return _structured_masked_norm(ss / ss.sum(), q)
    raise ValueError(f"unknown LampMatrix form {K.form!r}")


def _structured_masked_norm(z: np.ndarray, q: np.ndarray) -> float:
    """Masked norm of I - 1 z^T for a probability vector z and support of q."""
    n = z.shape[0]
    selected = int(q.sum())
    if selected == n:
        return 0.0
    if n == 1:
        # single unselected row: |1 - z_1|
        return float(1.0 - z[0])
    if selected == n - 1:
        j = int(np.flatnonzero(~q)[0])
        return float(max(z[j], 1.0 - z[j]))
    return float(2.0 * (1.0 - z[~q].min()) - z[q].sum())


def solve_lamp_activation(K: LampMatrix, tau: float) -> np.ndarray:
    """Exact optimum for diagonal matrices: select where |K_ii| > tau."""
    _check_tau(tau)
    if K.form != "activation":
        raise ValueError("solve_lamp_activation needs a diagonal (activation) matrix")
    return np.abs(K.data) > tau


def solve_lamp_greedy_softmax(z, tau: float) -> np.ndarray:
    """Greedy near-optimal selection for softmax probabilities z.

    Feasible for every tau >= 0 and within one selected component of the
    sparsest feasible mask. Sorting is by descending probability with ties
    broken by ascending index.
    """
    return _greedy_top_mass(_as_probability(z), tau)


def solve_lamp_greedy_rmsnorm(y, tau: float) -> np.ndarray:
    """Greedy selection for RMS normalization: same solver on z = y^2 / ||y||^2."""
    y = np.asarray(y, dtype=np.float64)
    ss = y * y
    total = ss.sum()
    if total == 0.0:
        raise SingularInputError("RMS normalization is undefined at the zero vector")
    return _greedy_top_mass(ss / total, tau)


def _greedy_top_mass(z: np.ndarray, tau: float) -> np.ndarray:
    """One sort plus one linear scan over the sorted cumulative mass.

    With tau = 2 - eps, the smallest s with z_(1) + ... + z_(s) + 2 z_(n) >= eps
    gives a feasible mask of the top-s entries whenever s <= n - 2; otherwise
    fall back to leaving out only the smallest entry, then to selecting all.
    """
    _check_tau(tau)
    n = z.shape[0]
    q = np.zeros(n, dtype=bool)
    if _structured_masked_norm(z, q) <= tau:
        return q
    eps = 2.0 - tau
    order = np.argsort(-z, kind="stable")
    if n >= 3:
        head = np.cumsum(z[order][: n - 2])
        ok = head + 2.0 * z[order[-1]] >= eps
        if ok.any():
            s = int(np.argmax(ok)) + 1
            q[order[:s]] = True
            return q
    j = int(np.argmin(z))
    q[:] = True
    if max(z[j], 1.0 - z[j]) <= tau:
        q[j] = False
    return q


def solve_lamp_bruteforce(K: LampMatrix, tau: float) -> np.ndarray:
    """Exhaustive minimum-cardinality selection, n <= 20.

    Masks are tried by increasing cardinality and, within a cardinality, in
    lexicographic order of their index tuples; the first feasible one wins.
    """
    _check_tau(tau)
    n = K.ncols
    if n > _BRUTE_FORCE_LIMIT:
        raise SizeLimitError(f"brute force is limited to n <= {_BRUTE_FORCE_LIMIT}, got {n}")
    for card in range(n + 1):
        masks = _combination_masks(n, card)
        feasible = _masked_norm_batch(K, masks) <= tau
        hits = np.flatnonzero(feasible)
        if hits.size:
            return masks[hits[0]].copy()
    raise AssertionError("q = 1 is always feasible for tau >= 0")


_COMBO_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _combination_masks(n: int, card: int) -> np.ndarray:
    """Boolean masks of all size-``card`` subsets of range(n), lexicographic."""
    key = (n, card)
    cached = _COMBO_CACHE.get(key)
    if cached is not None:
        return cached
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), card)),
        dtype=np.int64,
    )
    count = flat.shape[0] // card if card else 1
    masks = np.zeros((count, n), dtype=bool)
    if card:
        masks[np.repeat(np.arange(count), card), flat] = True
    if n <= 14:
        _COMBO_CACHE[key] = masks
    return masks


def _masked_norm_batch(K: LampMatrix, masks: np.ndarray) -> np.ndarray:
    """Masked norms of one matrix under many masks at once."""
    n = K.ncols
    card = int(masks[0].sum()) if masks.shape[0] else 0
    if K.form == "dense":
        return (np.abs(K.data) @ (~masks).T.astype(np.float64)).max(axis=0, initial=0.0)
    if K.form == "activation":
        d = np.abs(K.data)
        return np.where(masks, -np.inf, d[None, :]).max(axis=1, initial=0.0)
    z = K.data if K.form == "softmax" else None
    if z is None:
        y = K.data
        ss = y * y
        z = ss / ss.sum()
    if card == n:
        return np.zeros(masks.shape[0])
    if n == 1:
        return np.full(masks.shape[0], 1.0 - z[0])
    unsel_min = np.where(masks, np.inf, z[None, :]).min(axis=1)
    if card == n - 1:
        return np.maximum(unsel_min, 1.0 - unsel_min)
    return 2.0 * (1.0 - unsel_min) - masks.astype(np.float64) @ z


class SelectiveFunction(Protocol):
    """An inner function evaluable in low precision with per-component redo."""

    def baseline(self, x) -> np.ndarray: ...

    def recompute(self, x, indices) -> np.ndarray: ...


class MixedPrecisionMatvec:
    """Matrix-vector product with a rounded accumulator; rows can be redone
    as plain sequential float32 dots."""

    def __init__(self, a, spec: MixedDotSpec):
        self.a = np.asarray(a, dtype=np.float32)
        self.spec = spec

    def baseline(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float32)
        return rounded_accumulate(self.a * x[None, :], self.spec.accumulate_format)

    def recompute(self, x, indices) -> np.ndarray:
        x = np.asarray(x, dtype=np.float32)
        return rounded_accumulate(self.a[indices] * x[None, :], FP32)


def lamp_evaluate(
    g: SelectiveFunction,
    f: str,
    x,
    tau: float,
    kind: str | None = None,
    phi=None,
    dphi=None,
) -> np.ndarray:
    """Adaptive evaluation of g ahead of f.

    Computes the low-precision baseline, builds the sensitivity matrix of f
    at that baseline (and keeps it fixed), selects components with the
    appropriate solver, recomputes them in full float32, and returns the
    updated values.
    """
    y = np.array(g.baseline(x), dtype=np.float32)
    if f == "softmax":
        if kind not in (None, UNWEIGHTED):
            raise ValueError("softmax selection uses the unweighted objective")
        v = y.astype(np.float64)
        e = np.exp(v - v.max())
        q = _greedy_top_mass(e / e.sum(), tau)
    elif f == "rmsnorm":
        if kind not in (None, WEIGHTED):
            raise ValueError("RMS normalization selection uses the weighted objective")
        q = solve_lamp_greedy_rmsnorm(y.astype(np.float64), tau)
    elif f == "activation":
        if phi is None or dphi is None:
            raise ValueError("activation selection needs phi and dphi")
        K = lamp_matrix_activation(y.astype(np.float64), phi, dphi, kind or UNWEIGHTED)
        q = solve_lamp_activation(K, tau)
    else:
        raise ValueError(f"unsupported outer function {f!r}")
    indices = np.flatnonzero(q)
    if indices.size:
        y[indices] = g.recompute(x, indices)
    return y


def condition_vector_matvec(a, x) -> np.ndarray:
    """Componentwise error-magnification diagnostic of a matrix-vector product.

    k * (|A| |x|) / |A x| with k the inner dimension; exact zeros in A x are
    reported as +inf.
    """
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    k = x.shape[0]
    num = k * (np.abs(a) @ np.abs(x))
    den = np.abs(a @ x)
    out = np.full(den.shape, np.inf)
    nz = den != 0.0
    out[nz] = num[nz] / den[nz]
    return out


def composition_error_bound(K, y_hat, c_g, u_g: float, q) -> np.ndarray:
    """First-order bound on the inner-stage error amplified through f.

    Evaluates |diag(f(y))^-1 J diag(y)| (I - diag(q)) c_g * u_g per component.
    K may be a LampMatrix or a (jacobian, f_values) pair; rows where f(y) is
    exactly zero come out +inf. The outer-stage term c_f u_f of the full
    composite bound is out of scope here.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    c_g = np.asarray(c_g, dtype=np.float64)
    qf = _as_mask(q, y_hat.shape[0]).astype(np.float64)
    if isinstance(K, LampMatrix):
        w = np.abs(K.dense())
        if K.kind == UNWEIGHTED:
            w = w * np.abs(y_hat)[None, :]
    else:
        jac, f_vals = K
        jac = np.asarray(jac, dtype=np.float64)
        f_vals = np.asarray(f_vals, dtype=np.float64)
        zero_rows = f_vals == 0.0
        w = np.abs(jac) * np.abs(y_hat)[None, :]
        w = w / np.where(zero_rows, 1.0, np.abs(f_vals))[:, None]
        w[zero_rows] = np.inf
    if u_g == 0.0:
        return np.zeros(w.shape[0])
    weights = (1.0 - qf) * c_g
    cols = weights != 0.0
    return (w[:, cols] @ weights[cols]) * u_g


def _as_probability(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] == 0:
        raise ValueError("expected a nonempty probability vector")
    if np.any(z < 0.0) or abs(z.sum() - 1.0) > 1e-6:
        raise ValueError("expected nonnegative entries summing to 1")
    return z


def _as_mask(q, n: int) -> np.ndarray:
    q = np.asarray(q)
    if q.shape != (n,):
        raise ValueError(f"mask length {q.shape} does not match {n} columns")
    return q.astype(bool)


def _check_tau(tau: float) -> None:
    if not tau >= 0.0:
        raise ValueError(f"threshold tau must be >= 0, got {tau}")


def _check_kind(kind: str) -> None:
    if kind not in (UNWEIGHTED, WEIGHTED):
        raise ValueError(f"kind must be {UNWEIGHTED!r} or {WEIGHTED!r}, got {kind!r}")
