"""Choosing which components to recompute by looking at the next operator.

The row-normalized sensitivity matrix of the ensuing function tells us which
inner-function components amplify rounding error the most. For softmax the
answer is a greedy top-probability-mass rule; this script compares it with
exhaustive search and then walks the full adaptive evaluation of a
low-precision matrix-vector product feeding a softmax.
"""

import numpy as np

from lamp_infer import (
    FP32,
    FpFormat,
    MixedDotSpec,
    MixedPrecisionMatvec,
    lamp_evaluate,
    lamp_matrix_softmax,
    masked_norm,
    solve_lamp_bruteforce,
    solve_lamp_greedy_softmax,
)

rng = np.random.default_rng(2)

print("=== Greedy vs exhaustive on random probability vectors ===")
print("  tau   | greedy size | optimal size | feasible")
for tau in (1.9, 1.4, 1.1, 1.02):
    z = np.exp(rng.standard_normal(10))
    z /= z.sum()
    q = solve_lamp_greedy_softmax(z, tau)
    K = lamp_matrix_softmax(z)
    best = solve_lamp_bruteforce(K, tau)
    print(f"  {tau:4.2f}  | {int(q.sum()):11d} | {int(best.sum()):12d} |"
          f" {masked_norm(K, q) <= tau}")

print()
print("=== Confident rows need fewer recomputations ===")
for name, z in [
    ("near one-hot ", np.array([0.96, 0.01, 0.01, 0.01, 0.01])),
    ("spread       ", np.array([0.30, 0.25, 0.20, 0.15, 0.10])),
    ("uniform      ", np.full(5, 0.2)),
]:
    q = solve_lamp_greedy_softmax(z, 1.1)
    print(f"  {name}: recompute {int(q.sum())}/5 components at tau = 1.1")

print()
print("=== Adaptive evaluation of a matvec ahead of softmax ===")
a = rng.standard_normal((12, 64)).astype(np.float32)
x = rng.standard_normal(64).astype(np.float32)
exact = MixedPrecisionMatvec(a, MixedDotSpec(FP32)).baseline(x)


def softmax64(v):
    e = np.exp(v - np.max(v))
    return e / e.sum()


for tau in (2.0, 1.4, 1.02):
    g = MixedPrecisionMatvec(a, MixedDotSpec(FpFormat(4)))
    baseline = g.baseline(x)
    refined = lamp_evaluate(g, "softmax", x, tau=tau)
    err_base = np.abs(softmax64(baseline) - softmax64(exact)).max()
    err_ref = np.abs(softmax64(refined) - softmax64(exact)).max()
    redone = int(np.sum(refined != baseline))
    print(f"  tau = {tau:4.2f}: redone <= {redone:2d}/12 rows,"
          f" softmax error {err_base:.2e} -> {err_ref:.2e}")
