"""Experiment driver: reference/test sweeps over (mu, tau, mode) grids.

Reference probabilities are computed exactly once per sequence, cached on
disk, and reused for every grid cell. Sequences may be processed by a pool
of worker threads; per-sequence results are folded in sequence order and
BLAS is pinned to one thread during a sweep, so the emitted CSV is
bit-reproducible regardless of the worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError
from .files import read_tokens, read_weights
from .fp_sim import FpFormat
from .metrics import RunMetrics, aggregate, flip, kl_divergence
from .transformer import (
    MODE_LAMP,
    MODE_OFF,
    MODE_RANDOM,
    MODES,
    AttentionPrecisionPolicy,
    AttentionStats,
    LayerWeights,
    ModelConfig,
    ModelWeights,
    forward,
    reference_forward,
)

log = logging.getLogger(__name__)

_MODE_ALIASES = {"random-budget": MODE_RANDOM}

CSV_COLUMNS = (
    "model_id", "dataset_id", "mu", "tau", "mode", "mean_kl", "flip_rate",
    "recomputation_rate", "effective_mantissa_bits", "positions",
    "wall_time_seconds",
)


@dataclass(frozen=True)
class ExperimentConfig:
    weights_path: str
    dataset_path: str
    sequence_count: int = 20
    sequence_length: int = 256
    mu_list: tuple[int, ...] = (4, 7, 10)
    tau_list: tuple[float, ...] = (1.2,)
    mode: str = MODE_LAMP
    shuffle_tokens: bool = False
    seed: int = 0
    output_path: str | None = None

    def validate(self) -> None:
        if self.sequence_count < 1 or self.sequence_length < 1:
            raise ConfigError("sequence_count and sequence_length must be positive")
        if not self.mu_list or any(not 1 <= mu <= 23 for mu in self.mu_list):
            raise ConfigError(f"mu_list entries must lie in [1, 23], got {self.mu_list}")
        if not self.tau_list or any(tau < 0 for tau in self.tau_list):
            raise ConfigError(f"tau_list entries must be >= 0, got {self.tau_list}")
        if self.canonical_mode() not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")

    def canonical_mode(self) -> str:
        return _MODE_ALIASES.get(self.mode, self.mode)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg = cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class ResultRow:
    model_id: str
    dataset_id: str
    mu: int
    tau: float
    mode: str
    mean_kl: float
    flip_rate: float
    recomputation_rate: float
    effective_mantissa_bits: float
    positions: int
    wall_time_seconds: float

    def csv_record(self) -> list:
        return [getattr(self, col) for col in CSV_COLUMNS]


def shuffle_sequences(sequences, seed: int) -> list[np.ndarray]:
    """Independently permute each sequence, keyed by (seed, sequence index)."""
    out = []
    for i, seq in enumerate(sequences):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        out.append(np.asarray(seq)[rng.permutation(len(seq))])
    return out


def _softmax_rows_f32(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sequence_cell(weights, config, tokens, policy, ref_probs):
    logits, stats = forward(weights, config, tokens, policy)
    probs = _softmax_rows_f32(logits)
    records = []
    for pos in range(probs.shape[0]):
        records.append((kl_divergence(ref_probs[pos], probs[pos]), flip(ref_probs[pos], probs[pos])))
    return records, stats


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Run every (mu, tau) cell of the grid and return one row per cell.

    If cfg.output_path is set the CSV is written incrementally, one row per
    completed cell, so partial runs are recoverable.
    """
    cfg.validate()
    weights, model_config = read_weights(cfg.weights_path)
    sequences = read_tokens(cfg.dataset_path)
    if len(sequences) < cfg.sequence_count:
        raise ConfigError(
            f"dataset has {len(sequences)} sequences, config wants {cfg.sequence_count}"
        )
    sequences = [np.asarray(s[: cfg.sequence_length], dtype=np.int64) for s in sequences[: cfg.sequence_count]]
    if any(len(s) < cfg.sequence_length for s in sequences):
        raise ConfigError(f"dataset sequences shorter than {cfg.sequence_length}")
    if cfg.sequence_length > model_config.max_positions:
        raise ConfigError(
            f"sequence_length {cfg.sequence_length} exceeds model max_positions "
            f"{model_config.max_positions}"
        )
    if cfg.shuffle_tokens:
        sequences = shuffle_sequences(sequences, cfg.seed)
    model_id = Path(cfg.weights_path).stem
    dataset_id = Path(cfg.dataset_path).stem + ("-shuffled" if cfg.shuffle_tokens else "")
    mode = cfg.canonical_mode()

    rows: list[ResultRow] = []
    writer = _CsvWriter(cfg.output_path)
    with tempfile.TemporaryDirectory(prefix="lamp-ref-") as tmp, threadpool_limits(
        limits=1, user_api="blas"
    ), ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        ref_dir = Path(tmp)

        def compute_reference(i_seq):
            i, seq = i_seq
            probs = _softmax_rows_f32(reference_forward(weights, model_config, seq))
            np.save(ref_dir / f"ref{i}.npy", probs)

        list(pool.map(compute_reference, enumerate(sequences)))
        log.info("reference pass done for %d sequences", len(sequences))

        for mu in cfg.mu_list:
            for tau in cfg.tau_list:
                start = time.perf_counter()
                policy_base = AttentionPrecisionPolicy(FpFormat(mu), tau=tau, mode=mode)

                def run_one(i_seq):
                    i, seq = i_seq
                    policy = dataclasses.replace(policy_base, rng_seed=cfg.seed * 100003 + i)
                    ref_probs = np.load(ref_dir / f"ref{i}.npy")
                    return _sequence_cell(weights, model_config, seq, policy, ref_probs)

                records: list[tuple[float, bool]] = []
                stats = AttentionStats()
                for seq_records, seq_stats in pool.map(run_one, enumerate(sequences)):
                    records.extend(seq_records)
                    stats.recomputed_count += seq_stats.recomputed_count
                    stats.causal_pair_count += seq_stats.causal_pair_count
                metrics = aggregate(records, stats, mu)
                row = ResultRow(
                    model_id=model_id,
                    dataset_id=dataset_id,
                    mu=mu,
                    tau=tau,
                    mode=mode,
                    mean_kl=metrics.mean_kl,
                    flip_rate=metrics.flip_rate,
                    recomputation_rate=metrics.recomputation_rate,
                    effective_mantissa_bits=metrics.effective_mantissa_bits,
                    positions=metrics.positions_counted,
                    wall_time_seconds=time.perf_counter() - start,
                )
                rows.append(row)
                writer.write(row)
                log.info("cell mu=%d tau=%g mode=%s: kl=%.3e rate=%.4f", mu, tau, mode,
                         row.mean_kl, row.recomputation_rate)
    writer.close()
    return rows


class _CsvWriter:
    """Row-at-a-time CSV output with the header written up front."""

    def __init__(self, path):
        self._fh = None
        if path is not None:
            self._fh = open(path, "w", newline="")
            self._writer = csv.writer(self._fh)
            self._writer.writerow(CSV_COLUMNS)
            self._fh.flush()

    def write(self, row: ResultRow) -> None:
        if self._fh is not None:
            self._writer.writerow([_csv_value(v) for v in row.csv_record()])
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(rows, path) -> None:
    writer = _CsvWriter(path)
    for row in rows:
        writer.write(row)
    writer.close()


def make_tiny_model(seed: int = 0) -> tuple[ModelConfig, ModelWeights]:
    """Synthetic 2-layer, 2-head model so the test suite needs no assets.

    Weight scales are chosen so attention scores have enough spread for
    softmax rows to concentrate, which is the regime where selective
    recomputation matters.
    """
    config = ModelConfig(n_layers=2, n_heads=2, d_model=32, vocab_size=64, max_positions=512)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    d = config.d_model

    def draw(scale, *shape):
        return rng.normal(0.0, scale, size=shape).astype(np.float32)

    def gain(*shape):
        return (1.0 + rng.normal(0.0, 0.1, size=shape)).astype(np.float32)

    layers = []
    for _ in range(config.n_layers):
        layers.append(LayerWeights(
            ln1_g=gain(d), ln1_b=draw(0.1, d),
            w_qkv=draw(0.35, d, 3 * d), b_qkv=draw(0.1, 3 * d),
            w_proj=draw(0.18, d, d), b_proj=draw(0.1, d),
            ln2_g=gain(d), ln2_b=draw(0.1, d),
            w_fc=draw(0.18, d, 4 * d), b_fc=draw(0.1, 4 * d),
            w_out=draw(0.09, 4 * d, d), b_out=draw(0.1, d),
        ))
    weights = ModelWeights(
        wte=draw(0.5, config.vocab_size, d),
        wpe=draw(0.5, config.max_positions, d),
        layers=layers,
        lnf_g=gain(d),
        lnf_b=draw(0.1, d),
    )
    weights.validate(config)
    return config, weights


def make_tiny_dataset(seed: int, n_sequences: int, sequence_length: int,
                      vocab_size: int = 64) -> list[np.ndarray]:
    """Uniform random token sequences for the synthetic model."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))
    return [
        rng.integers(0, vocab_size, size=sequence_length, dtype=np.uint32)
        for _ in range(n_sequences)
    ]
