"""Convert GPT-2-family checkpoints into the LAMPW01 weight container.

The source is a local HuggingFace-style directory (config.json plus
model.safetensors, or pytorch_model.bin when torch is importable). GPT-2
stores its matmul weights in [in, out] orientation, which is already what
the container expects, so the default manifest carries no transposes; the
mechanism exists for checkpoints with flipped layouts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .containers import write_weight_tensors

_LAYER_FIELDS = (
    "ln1_g", "ln1_b", "w_qkv", "b_qkv", "w_proj", "b_proj",
    "ln2_g", "ln2_b", "w_fc", "b_fc", "w_out", "b_out",
)


@dataclass(frozen=True)
class ConversionManifest:
    """Mapping from container tensor names to checkpoint tensor names."""

    n_heads: int
    tensor_map: dict[str, str]          # container name -> checkpoint name
    expected_shapes: dict[str, tuple]   # container name -> shape after transpose
    transpose: frozenset = field(default_factory=frozenset)  # container names stored flipped

    def validate(self) -> None:
        missing = set(self.expected_shapes) - set(self.tensor_map)
        extra = set(self.tensor_map) - set(self.expected_shapes)
        if missing or extra:
            raise ValueError(
                f"manifest inconsistent: unmapped {sorted(missing)}, unexpected {sorted(extra)}"
            )


def gpt2_manifest(config: dict) -> ConversionManifest:
    """Manifest for HuggingFace GPT-2 checkpoints, built from config.json."""
    d = config["n_embd"]
    vocab = config["vocab_size"]
    n_pos = config["n_positions"]
    tensor_map = {"wte": "transformer.wte.weight", "wpe": "transformer.wpe.weight"}
    shapes = {"wte": (vocab, d), "wpe": (n_pos, d)}
    hf_per_layer = {
        "ln1_g": "ln_1.weight", "ln1_b": "ln_1.bias",
        "w_qkv": "attn.c_attn.weight", "b_qkv": "attn.c_attn.bias",
        "w_proj": "attn.c_proj.weight", "b_proj": "attn.c_proj.bias",
        "ln2_g": "ln_2.weight", "ln2_b": "ln_2.bias",
        "w_fc": "mlp.c_fc.weight", "b_fc": "mlp.c_fc.bias",
        "w_out": "mlp.c_proj.weight", "b_out": "mlp.c_proj.bias",
    }
    layer_shapes = {
        "ln1_g": (d,), "ln1_b": (d,),
        "w_qkv": (d, 3 * d), "b_qkv": (3 * d,),
        "w_proj": (d, d), "b_proj": (d,),
        "ln2_g": (d,), "ln2_b": (d,),
        "w_fc": (d, 4 * d), "b_fc": (4 * d,),
        "w_out": (4 * d, d), "b_out": (d,),
    }
    for i in range(config["n_layer"]):
        for ours, theirs in hf_per_layer.items():
            tensor_map[f"h{i}.{ours}"] = f"transformer.h.{i}.{theirs}"
            shapes[f"h{i}.{ours}"] = layer_shapes[ours]
    tensor_map["lnf_g"] = "transformer.ln_f.weight"
    tensor_map["lnf_b"] = "transformer.ln_f.bias"
    shapes["lnf_g"] = (d,)
    shapes["lnf_b"] = (d,)
    return ConversionManifest(n_heads=config["n_head"], tensor_map=tensor_map,
                              expected_shapes=shapes)


def load_checkpoint(checkpoint_dir) -> tuple[dict, dict[str, np.ndarray]]:
    """Read config.json and all tensors from a local checkpoint directory."""
    root = Path(checkpoint_dir)
    config_path = root / "config.json"
    if not config_path.exists():
        raise FileNotFoundError(f"no config.json under {root}")
    with open(config_path) as fh:
        config = json.load(fh)
    st_path = root / "model.safetensors"
    if st_path.exists():
        from safetensors.numpy import load_file

        return config, {k: np.asarray(v) for k, v in load_file(st_path).items()}
    bin_path = root / "pytorch_model.bin"
    if bin_path.exists():
        import torch

        state = torch.load(bin_path, map_location="cpu", weights_only=True)
        return config, {k: v.numpy() for k, v in state.items()}
    raise FileNotFoundError(f"no model.safetensors or pytorch_model.bin under {root}")


def convert_weights(checkpoint_dir, manifest: ConversionManifest, out_path,
                    report_path=None) -> dict:
    """Write the LAMPW01 file and return (optionally also write) a shape report.

    Fails hard, listing every offender, if mapped tensors are missing from
    the checkpoint or arrive with unexpected shapes.
    """
    manifest.validate()
    _, raw = load_checkpoint(checkpoint_dir)
    missing = []
    mis_shaped = []
    out: dict[str, np.ndarray] = {"n_heads": np.array([manifest.n_heads], dtype=np.float32)}
    for ours, theirs in manifest.tensor_map.items():
        if theirs not in raw:
            missing.append(f"{ours} <- {theirs}")
            continue
        arr = np.asarray(raw[theirs], dtype=np.float32)
        if ours in manifest.transpose:
            arr = arr.T
        want = tuple(manifest.expected_shapes[ours])
        if arr.shape != want:
            mis_shaped.append(f"{ours}: got {arr.shape}, expected {want}")
            continue
        out[ours] = np.ascontiguousarray(arr)
    if missing or mis_shaped:
        raise ValueError(
            "checkpoint does not satisfy the manifest;"
            + (f" missing: {missing};" if missing else "")
            + (f" mis-shaped: {mis_shaped}" if mis_shaped else "")
        )
    ordered = {"n_heads": out["n_heads"], "wte": out["wte"], "wpe": out["wpe"]}
    i = 0
    while f"h{i}.ln1_g" in out:
        for fieldname in _LAYER_FIELDS:
            ordered[f"h{i}.{fieldname}"] = out[f"h{i}.{fieldname}"]
        i += 1
    ordered["lnf_g"] = out["lnf_g"]
    ordered["lnf_b"] = out["lnf_b"]
    write_weight_tensors(out_path, ordered)
    report = {
        "n_layers": i,
        "n_heads": manifest.n_heads,
        "d_model": int(out["wte"].shape[1]),
        "vocab_size": int(out["wte"].shape[0]),
        "max_positions": int(out["wpe"].shape[0]),
        "tensors": {name: list(arr.shape) for name, arr in ordered.items()},
    }
    if report_path is not None:
        with open(report_path, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    return report
