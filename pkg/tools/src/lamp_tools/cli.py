"""Console entry points: lamp-convert-gpt2, lamp-tokenize, lamp-plot.

Exit codes: 0 success, 1 validation problems, 2 missing or unreadable files.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bpe import BpeTokenizer, tokenize_corpus
from .convert import convert_weights, gpt2_manifest, load_checkpoint
from .plots import plot_results


def _run(fn) -> int:
    try:
        return fn()
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def convert_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lamp-convert-gpt2",
        description="Convert a local GPT-2 checkpoint directory into a LAMPW01 file",
    )
    parser.add_argument("--in", dest="src", required=True, help="checkpoint directory")
    parser.add_argument("--out", required=True, help="LAMPW01 output path")
    parser.add_argument("--report", help="also write a JSON shape report here")

    def go():
        args = parser.parse_args(argv)
        config, _ = load_checkpoint(args.src)
        report = convert_weights(args.src, gpt2_manifest(config), args.out, args.report)
        print(f"wrote {args.out}: {report['n_layers']} layers, d_model {report['d_model']}, "
              f"vocab {report['vocab_size']}")
        return 0

    return _run(go)


def tokenize_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lamp-tokenize",
        description="Tokenize UTF-8 text files into a LAMPT01 dataset with byte-level BPE",
    )
    parser.add_argument("--in", dest="src", nargs="+", required=True, help="text files, in order")
    parser.add_argument("--out", required=True, help="LAMPT01 output path")
    parser.add_argument("--vocab", required=True, help="vocab.json path")
    parser.add_argument("--merges", required=True, help="merges.txt path")
    parser.add_argument("--seq-len", type=int, default=1024)
    parser.add_argument("--max-seqs", type=int, default=None)

    def go():
        args = parser.parse_args(argv)
        tok = BpeTokenizer.from_files(args.vocab, args.merges)
        n = tokenize_corpus(args.src, args.out, tok, args.seq_len, args.max_seqs)
        print(f"wrote {n} sequences of {args.seq_len} tokens to {args.out}")
        return 0

    return _run(go)


def plot_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lamp-plot",
        description="Render sweep CSVs into metric panels vs mu and vs tau",
    )
    parser.add_argument("--in", dest="src", nargs="+", required=True, help="CSV files")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--format", default="png", choices=["png", "svg"])

    def go():
        args = parser.parse_args(argv)
        written = plot_results(args.src, args.out_dir, args.format)
        for path in written:
            print(f"wrote {path}")
        return 0

    return _run(go)


if __name__ == "__main__":
    sys.exit(convert_main())
