"""Byte-level BPE encoding (GPT-2 style) and corpus tokenization.

Text is split with the GPT-2 pre-tokenization pattern, each piece is mapped
byte-by-byte into the printable-unicode alphabet, and learned merges are
applied best-rank-first. Only encoding is implemented; the vocabulary and
merge list come from the standard vocab.json / merges.txt pair.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import regex

from .containers import write_token_sequences

_SPLIT = regex.compile(
    r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""
)


def bytes_to_unicode() -> dict[int, str]:
    """The reversible byte -> printable-character table used by GPT-2."""
    printable = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    chars = printable[:]
    extra = 0
    for b in range(256):
        if b not in printable:
            printable.append(b)
            chars.append(256 + extra)
            extra += 1
    return dict(zip(printable, (chr(c) for c in chars)))


class BpeTokenizer:
    def __init__(self, vocab: dict[str, int], merges: list[tuple[str, str]]):
        self.vocab = dict(vocab)
        self.ranks = {pair: i for i, pair in enumerate(merges)}
        self.byte_map = bytes_to_unicode()
        self._cache: dict[str, list[str]] = {}

    @classmethod
    def from_files(cls, vocab_path, merges_path) -> "BpeTokenizer":
        with open(vocab_path, encoding="utf-8") as fh:
            vocab = json.load(fh)
        merges = []
        with open(merges_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                a, b = line.split(" ")
                merges.append((a, b))
        return cls(vocab, merges)

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for piece in _SPLIT.findall(text):
            mapped = "".join(self.byte_map[b] for b in piece.encode("utf-8"))
            for sym in self._merge(mapped):
                ids.append(self.vocab[sym])
        return ids

    def _merge(self, token: str) -> list[str]:
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        parts = list(token)
        while len(parts) > 1:
            pairs = {(parts[i], parts[i + 1]) for i in range(len(parts) - 1)}
            best = min(pairs, key=lambda p: self.ranks.get(p, float("inf")))
            if best not in self.ranks:
                break
            merged: list[str] = []
            i = 0
            while i < len(parts):
                if i < len(parts) - 1 and (parts[i], parts[i + 1]) == best:
                    merged.append(parts[i] + parts[i + 1])
                    i += 2
                else:
                    merged.append(parts[i])
                    i += 1
            parts = merged
        self._cache[token] = parts
        return parts


def tokenize_corpus(text_paths, out_path, tokenizer: BpeTokenizer,
                    seq_len: int, max_seqs: int | None = None) -> int:
    """Encode text files into fixed-length non-overlapping sequences.

    Files are processed in the given order; the concatenated id stream is cut
    into complete length-``seq_len`` sequences (the tail remainder is
    dropped). Returns the number of sequences written.
    """
    if seq_len < 1:
        raise ValueError("seq_len must be positive")
    ids: list[int] = []
    for path in text_paths:
        text = Path(path).read_text(encoding="utf-8")
        ids.extend(tokenizer.encode(text))
    n_seqs = len(ids) // seq_len
    if max_seqs is not None:
        n_seqs = min(n_seqs, max_seqs)
    if n_seqs == 0:
        raise ValueError(
            f"corpus too small: {len(ids)} tokens yield no complete length-{seq_len} sequence"
        )
    seqs = [np.asarray(ids[i * seq_len:(i + 1) * seq_len], dtype=np.uint32)
            for i in range(n_seqs)]
    write_token_sequences(out_path, seqs)
    return n_seqs
