import json
import shutil
import subprocess
import sys

import numpy as np
import pytest


def have_module(name: str) -> bool:
    try:
        __import__(name)
        return True
    except ImportError:
        return False


@pytest.fixture(scope="session")
def fake_gpt2_dir(tmp_path_factory):
    """A locally constructed random-init GPT-2 checkpoint (no network).

    initializer_range is raised so logits are well separated and argmax
    comparisons are stable across implementations.
    """
    if not have_module("transformers"):
        pytest.skip("transformers not installed")
    import torch
    from transformers import GPT2Config, GPT2LMHeadModel

    torch.manual_seed(0)
    config = GPT2Config(
        vocab_size=97, n_positions=64, n_embd=32, n_layer=2, n_head=2,
        initializer_range=0.25, attn_pdrop=0.0, embd_pdrop=0.0, resid_pdrop=0.0,
        bos_token_id=0, eos_token_id=0,
    )
    model = GPT2LMHeadModel(config)
    model.eval()
    out = tmp_path_factory.mktemp("ckpt") / "gpt2-fake"
    model.save_pretrained(out, safe_serialization=True)
    return str(out)


@pytest.fixture(scope="session")
def mini_bpe_files(tmp_path_factory):
    """Hand-built vocab.json / merges.txt over a tiny alphabet."""
    root = tmp_path_factory.mktemp("bpe")
    symbols = ["l", "o", "w", "e", "r", "s", "t", "Ġ", "lo", "low", "er"]
    vocab = {s: i for i, s in enumerate(symbols)}
    merges = ["#version: 0.2", "l o", "lo w", "e r"]
    vocab_path = root / "vocab.json"
    merges_path = root / "merges.txt"
    vocab_path.write_text(json.dumps(vocab), encoding="utf-8")
    merges_path.write_text("\n".join(merges) + "\n", encoding="utf-8")
    return str(vocab_path), str(merges_path)


def run_primary_cli(args: list[str]) -> subprocess.CompletedProcess:
    """Invoke the inference package strictly through its console interface."""
    exe = shutil.which("lamp-infer")
    cmd = [exe] + args if exe else [sys.executable, "-m", "lamp_infer.cli"] + args
    return subprocess.run(cmd, capture_output=True, text=True)
