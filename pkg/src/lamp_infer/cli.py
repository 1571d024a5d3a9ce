"""Command-line entry point: lamp-infer {run, gen-tiny, sweep}.

Exit codes: 0 on success, 1 for validation problems, 2 for I/O and container
format problems.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, FormatError
from .files import write_tokens, write_weights
from .harness import ExperimentConfig, make_tiny_dataset, make_tiny_model, run_sweep


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lamp-infer",
        description="Mixed-precision attention experiments with selective recomputation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep described by a JSON config file")
    run.add_argument("--config", required=True, help="path to a JSON experiment config")
    run.add_argument("--threads", type=int, default=1, help="worker threads over sequences")
    run.set_defaults(func=_cmd_run)

    gen = sub.add_parser("gen-tiny", help="generate the built-in tiny synthetic model")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="weights output path (LAMPW01)")
    gen.add_argument("--tokens-out", help="also write a random token dataset (LAMPT01)")
    gen.add_argument("--seqs", type=int, default=20, help="sequences for --tokens-out")
    gen.add_argument("--seq-len", type=int, default=256, help="tokens per sequence for --tokens-out")
    gen.set_defaults(func=_cmd_gen_tiny)

    sweep = sub.add_parser("sweep", help="run a sweep straight from flags")
    sweep.add_argument("--mu", required=True, help="comma-separated mantissa bit counts, e.g. 2,4,7,10")
    sweep.add_argument("--tau", required=True, help="comma-separated thresholds, e.g. 1.02,1.1,1.4,2.0")
    sweep.add_argument("--mode", default="lamp", choices=["lamp", "random", "off"])
    sweep.add_argument("--shuffle", action="store_true", help="permute tokens within each sequence")
    sweep.add_argument("--seqs", type=int, default=20)
    sweep.add_argument("--seq-len", type=int, default=256)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--weights", required=True)
    sweep.add_argument("--dataset", required=True)
    sweep.add_argument("--out", required=True, help="CSV output path")
    sweep.add_argument("--threads", type=int, default=1)
    sweep.set_defaults(func=_cmd_sweep)
    return parser


def _cmd_run(args) -> int:
    with open(args.config) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = ExperimentConfig.from_dict(raw)
    run_sweep(cfg, threads=args.threads)
    return 0


def _cmd_gen_tiny(args) -> int:
    config, weights = make_tiny_model(args.seed)
    write_weights(args.out, weights, config)
    print(f"wrote tiny model ({config.n_layers} layers, d_model {config.d_model}) to {args.out}")
    if args.tokens_out:
        seqs = make_tiny_dataset(args.seed, args.seqs, args.seq_len, config.vocab_size)
        write_tokens(args.tokens_out, seqs)
        print(f"wrote {args.seqs} x {args.seq_len} tokens to {args.tokens_out}")
    return 0


def _cmd_sweep(args) -> int:
    try:
        mu_list = tuple(int(v) for v in args.mu.split(","))
        tau_list = tuple(float(v) for v in args.tau.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --mu/--tau value: {exc}") from exc
    cfg = ExperimentConfig(
        weights_path=args.weights,
        dataset_path=args.dataset,
        sequence_count=args.seqs,
        sequence_length=args.seq_len,
        mu_list=mu_list,
        tau_list=tau_list,
        mode=args.mode,
        shuffle_tokens=args.shuffle,
        seed=args.seed,
        output_path=args.out,
    )
    rows = run_sweep(cfg, threads=args.threads)
    print(f"wrote {len(rows)} result rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
