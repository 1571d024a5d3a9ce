"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one `[ACCEPTANCE] <name>: PASS|FAIL` line (visible with
`pytest -s` or in captured output on failure). The heavy trend checks run a
real sweep on the built-in tiny synthetic model.
"""

import itertools
import time

import numpy as np
import pytest

from lamp_infer import (
    ExperimentConfig,
    FP32,
    AttentionPrecisionPolicy,
    FpFormat,
    aggregate,
    forward,
    lamp_matrix_rmsnorm,
    lamp_matrix_softmax,
    make_tiny_dataset,
    make_tiny_model,
    masked_norm,
    reference_forward,
    round_ps,
    run_sweep,
    solve_lamp_bruteforce,
    solve_lamp_greedy_softmax,
    write_tokens,
    write_weights,
)
from lamp_infer.transformer import MODE_OFF, AttentionStats

from conftest import mask_wall_time
from test_fp_sim import boundary_patterns, oracle_round_pattern
from test_lamp import dense_masked_norm, random_probability


def report(name: str, passed: bool, detail: str = ""):
    print(f"[ACCEPTANCE] {name}: {'PASS' if passed else 'FAIL'}"
          + (f" ({detail})" if detail else ""))
    assert passed, f"{name}: {detail}"


@pytest.fixture(scope="module")
def sweep_assets(tmp_path_factory):
    """Weights and a 20 x 256 dataset for the tiny synthetic model."""
    root = tmp_path_factory.mktemp("acceptance")
    config, weights = make_tiny_model(0)
    wpath = root / "tiny.lampw"
    dpath = root / "tiny.lampt"
    write_weights(wpath, weights, config)
    write_tokens(dpath, make_tiny_dataset(0, 20, 256, config.vocab_size))
    return str(wpath), str(dpath), config, weights


def base_config(wpath, dpath, **overrides):
    defaults = dict(weights_path=wpath, dataset_path=dpath,
                    sequence_count=20, sequence_length=256)
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


def test_format_identity(sweep_assets):
    wpath, dpath, config, weights = sweep_assets
    start = time.perf_counter()
    rows = run_sweep(base_config(wpath, dpath, mu_list=(23,), tau_list=(2.0,), mode="off"))
    sequences = make_tiny_dataset(0, 20, 256, config.vocab_size)
    identical = True
    policy = AttentionPrecisionPolicy(FP32, tau=2.0, mode=MODE_OFF)
    for seq in sequences:
        toks = seq.astype(np.int64)
        ref = reference_forward(weights, config, toks)
        out, _ = forward(weights, config, toks, policy)
        identical &= bool(np.array_equal(
            np.ascontiguousarray(ref).view(np.uint32),
            np.ascontiguousarray(out).view(np.uint32),
        ))
    elapsed = time.perf_counter() - start
    ok = (identical and rows[0].mean_kl == 0.0 and rows[0].flip_rate == 0.0 and elapsed < 60.0)
    report("format-identity", ok,
           f"bitwise={identical} mean_kl={rows[0].mean_kl} flip={rows[0].flip_rate} "
           f"elapsed={elapsed:.1f}s")


def test_rounding_correctness():
    rng = np.random.default_rng(20260810)
    mismatches = 0
    total = 0
    per_mu = 1_000_000 // 23
    for mu in range(1, 24):
        pats = rng.integers(0, 2**32, size=per_mu, dtype=np.uint64).astype(np.uint32)
        got = round_ps(pats.view(np.float32), FpFormat(mu)).view(np.uint32)
        for pat, out in zip(pats.tolist(), got.tolist()):
            expect = oracle_round_pattern(pat, mu)
            total += 1
            if out != expect:
                # NaN payloads only need to stay NaN
                if not ((expect & 0x7F800000) == 0x7F800000 and expect & 0x7FFFFF
                        and (out & 0x7F800000) == 0x7F800000 and out & 0x7FFFFF):
                    mismatches += 1
        boundary = boundary_patterns(mu)
        got_b = round_ps(np.array(boundary, dtype=np.uint32).view(np.float32),
                         FpFormat(mu)).view(np.uint32)
        for pat, out in zip(boundary, got_b.tolist()):
            total += 1
            if out != oracle_round_pattern(pat, mu):
                mismatches += 1
    report("rounding-correctness", mismatches == 0,
           f"{total} patterns checked, {mismatches} mismatches")


def test_greedy_near_optimality():
    start = time.perf_counter()
    rng = np.random.default_rng(31415)
    taus = (1.02, 1.1, 1.4, 1.9)
    infeasible = 0
    over_budget = 0
    checked = 0
    for n in range(3, 13):
        for _ in range(1000):
            z = random_probability(rng, n, scale=rng.uniform(0.2, 3.0))
            K = lamp_matrix_softmax(z)
            for tau in taus:
                q = solve_lamp_greedy_softmax(z, tau)
                if masked_norm(K, q) > tau:
                    infeasible += 1
                best = solve_lamp_bruteforce(K, tau)
                if q.sum() > best.sum() + 1:
                    over_budget += 1
                checked += 1
    elapsed = time.perf_counter() - start
    ok = infeasible == 0 and over_budget == 0 and elapsed < 120.0
    report("greedy-near-optimality", ok,
           f"{checked} cases, infeasible={infeasible}, over budget+1={over_budget}, "
           f"elapsed={elapsed:.1f}s")


def test_lemma_oracle_equivalence():
    rng = np.random.default_rng(2718)
    worst = 0.0
    count = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 11))
        if rng.random() < 0.5:
            K = lamp_matrix_softmax(random_probability(rng, n, scale=rng.uniform(0.2, 4.0)))
        else:
            y = rng.standard_normal(n) * 10.0 ** rng.integers(-2, 3)
            if not np.any(y != 0.0):
                continue
            K = lamp_matrix_rmsnorm(y)
        q = rng.random(n) < rng.random()
        got = masked_norm(K, q)
        expect = dense_masked_norm(K.dense(), q)
        scale = max(abs(expect), 1e-300)
        worst = max(worst, abs(got - expect) / scale)
        count += 1
    # all leave-one-out supports for n <= 10
    for n in range(2, 11):
        z = random_probability(rng, n)
        K = lamp_matrix_softmax(z)
        for j in range(n):
            q = np.ones(n, bool)
            q[j] = False
            got = masked_norm(K, q)
            expect = dense_masked_norm(K.dense(), q)
            worst = max(worst, abs(got - expect) / max(abs(expect), 1e-300))
            count += 1
    report("lemma-oracle-equivalence", worst <= 1e-12,
           f"{count} instances, worst relative deviation {worst:.2e}")


def test_jacobian_checks():
    def softmax64(v):
        e = np.exp(v - v.max())
        return e / e.sum()

    def rms(v):
        return np.sqrt(v.shape[0]) * v / np.linalg.norm(v)

    def fd_jacobian(f, y, h=1e-5):
        cols = []
        for j in range(y.shape[0]):
            up, dn = y.copy(), y.copy()
            up[j] += h
            dn[j] -= h
            cols.append((f(up) - f(dn)) / (2 * h))
        return np.stack(cols, axis=1)

    rng = np.random.default_rng(11235)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 10))
        y = rng.standard_normal(n) * 1.5
        z = softmax64(y)
        K = lamp_matrix_softmax(z).dense()
        K_fd = np.diag(1.0 / z) @ fd_jacobian(softmax64, y)
        worst = max(worst, np.abs(K - K_fd).max() / np.abs(K).max())

        y = rng.standard_normal(n) + np.sign(rng.standard_normal(n)) * 0.5
        K = lamp_matrix_rmsnorm(y).dense()
        K_fd = np.diag(1.0 / rms(y)) @ fd_jacobian(rms, y) @ np.diag(y)
        worst = max(worst, np.abs(K - K_fd).max() / np.abs(K).max())
    report("jacobian-checks", worst < 1e-5, f"worst relative deviation {worst:.2e}")


def test_closed_form_selection_counts():
    ok = True
    details = []
    for eps in (0.1, 0.5, 0.9):
        for n in (10, 100):
            z = np.full(n, 1.0 / (n - 1))
            z[-1] = 0.0
            got = int(solve_lamp_greedy_softmax(z, 2.0 - eps).sum())
            want = int(np.ceil(eps * (n - 1)))
            ok &= got == want
            details.append(f"eps={eps} n={n}: {got}/{want}")
    for n in (10, 100):
        z = np.zeros(n)
        z[0] = 1.0
        got = int(solve_lamp_greedy_softmax(z, 1.5).sum())
        ok &= got == 1
        details.append(f"one-hot n={n}: {got}/1")
    report("closed-form-selection-counts", ok, "; ".join(details))


def test_trend_reproduction(sweep_assets):
    wpath, dpath, _, _ = sweep_assets
    start = time.perf_counter()
    mu_rows = run_sweep(base_config(wpath, dpath, mu_list=(2, 4, 7, 10, 14),
                                    tau_list=(1.2,), mode="lamp"))
    kl_mu = {r.mu: r.mean_kl for r in mu_rows}
    mu_seq = [2, 4, 7, 10, 14]
    mu_monotone = all(kl_mu[a] >= kl_mu[b] for a, b in zip(mu_seq, mu_seq[1:]))
    mu_strict = kl_mu[2] > kl_mu[10]

    tau_rows = run_sweep(base_config(wpath, dpath, mu_list=(4,),
                                     tau_list=(2.0, 1.4, 1.1, 1.02), mode="lamp"))
    kl_tau = {r.tau: r.mean_kl for r in tau_rows}
    tau_seq = [2.0, 1.4, 1.1, 1.02]
    tau_monotone = all(kl_tau[a] >= kl_tau[b] for a, b in zip(tau_seq, tau_seq[1:]))
    reduction = kl_tau[2.0] / kl_tau[1.02]
    elapsed = time.perf_counter() - start
    ok = mu_monotone and mu_strict and tau_monotone and reduction >= 5.0 and elapsed < 600.0
    report("trend-reproduction", ok,
           f"kl(mu)={[f'{kl_mu[m]:.2e}' for m in mu_seq]} monotone={mu_monotone} "
           f"strict2to10={mu_strict}; kl(tau)={[f'{kl_tau[t]:.2e}' for t in tau_seq]} "
           f"monotone={tau_monotone} reduction={reduction:.0f}x; elapsed={elapsed:.0f}s")


def test_ablation_separation(sweep_assets):
    wpath, dpath, _, _ = sweep_assets
    kl_lamp = run_sweep(base_config(wpath, dpath, mu_list=(4,), tau_list=(1.2,),
                                    mode="lamp"))[0].mean_kl
    kl_rand = run_sweep(base_config(wpath, dpath, mu_list=(4,), tau_list=(1.2,),
                                    mode="random"))[0].mean_kl
    kl_off = run_sweep(base_config(wpath, dpath, mu_list=(4,), tau_list=(1.2,),
                                   mode="off"))[0].mean_kl
    lamp_wins = kl_rand >= 3.0 * kl_lamp
    random_useless = kl_off / 2.0 <= kl_rand <= 2.0 * kl_off
    report("ablation-separation", lamp_wins and random_useless,
           f"lamp={kl_lamp:.2e} random={kl_rand:.2e} off={kl_off:.2e} "
           f"(random/lamp={kl_rand / kl_lamp:.1f}x, random/off={kl_rand / kl_off:.2f})")


def test_effective_bits_formula():
    m = aggregate([(0.0, False)], AttentionStats(83, 1000), mu=7)
    exact = m.effective_mantissa_bits == 8.909
    formula = m.effective_mantissa_bits == 7 + 23.0 * 0.083
    report("effective-bits-formula", exact and formula,
           f"got {m.effective_mantissa_bits!r}")


def test_determinism_across_threads(sweep_assets, tmp_path):
    wpath, dpath, _, _ = sweep_assets
    texts = []
    for threads, name in ((1, "t1.csv"), (8, "t8.csv")):
        out = tmp_path / name
        cfg = base_config(wpath, dpath, sequence_count=8, sequence_length=96,
                          mu_list=(4, 7), tau_list=(1.2, 1.02), mode="lamp",
                          seed=7, output_path=str(out))
        run_sweep(cfg, threads=threads)
        texts.append(out.read_text())
    same = mask_wall_time(texts[0]) == mask_wall_time(texts[1])
    report("determinism-across-threads", same,
           "CSV byte-identical after blanking the measured wall-time column")
