"""Offline tooling around the lamp-infer containers: checkpoint conversion,
byte-level BPE tokenization, and sweep-result plotting."""

from .bpe import BpeTokenizer, bytes_to_unicode, tokenize_corpus
from .containers import (
    read_token_sequences,
    read_weight_tensors,
    write_token_sequences,
    write_weight_tensors,
)
from .convert import ConversionManifest, convert_weights, gpt2_manifest, load_checkpoint
from .plots import load_rows, plot_results

__version__ = "0.1.0"
