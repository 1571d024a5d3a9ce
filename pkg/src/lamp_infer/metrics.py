"""Comparison metrics between reference and test model output distributions."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

log = logging.getLogger(__name__)

# Test probabilities are floored here before the log to keep the divergence
# finite; hits are logged.
KL_FLOOR = 1e-30


@dataclass(frozen=True)
class RunMetrics:
    """Aggregated comparison of a test model against the reference.

    effective_mantissa_bits counts the average mantissa work per inner
    product: the low-precision pass always happens (mu bits) and every
    recomputation adds a 23-bit pass, so it is mu + 23 * recomputation_rate.
    """

    mean_kl: float
    flip_rate: float
    recomputation_rate: float
    effective_mantissa_bits: float
    positions_counted: int


def kl_divergence(p_ref, p_test) -> float:
    """KL(reference || test) in nats, computed in double precision.

    Terms with p_ref = 0 contribute nothing; p_test is floored at KL_FLOOR so
    the result stays finite.
    """
    p = np.asarray(p_ref, dtype=np.float64)
    q = np.asarray(p_test, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"distributions must share one shape, got {p.shape} and {q.shape}")
    support = p > 0.0
    qs = q[support]
    floored = qs < KL_FLOOR
    if floored.any():
        log.debug("kl_divergence floored %d test probabilities at %g", floored.sum(), KL_FLOOR)
        qs = np.maximum(qs, KL_FLOOR)
    ps = p[support]
    return float(np.sum(ps * np.log(ps / qs)))


def flip(p_ref, p_test) -> bool:
    """Whether the most probable indices differ; ties go to the lowest index."""
    p = np.asarray(p_ref)
    q = np.asarray(p_test)
    if p.shape != q.shape:
        raise ValueError(f"distributions must share one shape, got {p.shape} and {q.shape}")
    return int(np.argmax(p)) != int(np.argmax(q))


def aggregate(records: Iterable[tuple[float, bool]], stats, mu: int) -> RunMetrics:
    """Fold per-position (kl, flipped) records and attention counters.

    KL values are summed in record order in double precision, so repeated
    runs aggregate bit-identically.
    """
    total_kl = 0.0
    flips = 0
    positions = 0
    for kl, flipped in records:
        total_kl += kl
        flips += bool(flipped)
        positions += 1
    if positions == 0:
        raise ValueError("aggregate needs at least one position record")
    if stats.causal_pair_count > 0:
        rate = stats.recomputed_count / stats.causal_pair_count
    else:
        rate = 0.0
    return RunMetrics(
        mean_kl=total_kl / positions,
        flip_rate=flips / positions,
        recomputation_rate=rate,
        effective_mantissa_bits=mu + 23.0 * rate,
        positions_counted=positions,
    )
