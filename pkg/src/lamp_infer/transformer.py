"""GPT-2-style decoder forward pass with precision-instrumented attention.

Everything runs in plain float32 except the key-query score accumulation,
which follows an AttentionPrecisionPolicy: scores are accumulated in a
reduced-mantissa format and, per softmax row, a subset of them can be
recomputed as plain float32 dots. The subset is chosen either by the greedy
selector driven by the baseline softmax probabilities ("lamp") or uniformly
at random with the same per-row budget ("random").
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fp_sim import FP32, FpFormat, rounded_accumulate
from .kernels import gelu, layernorm, softmax_row
from .lamp import solve_lamp_greedy_softmax

MODE_LAMP = "lamp"
MODE_RANDOM = "random"
MODE_OFF = "off"
MODES = (MODE_LAMP, MODE_RANDOM, MODE_OFF)


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int
    n_heads: int
    d_model: int
    vocab_size: int
    max_positions: int

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads


@dataclass
class LayerWeights:
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    w_qkv: np.ndarray  # [d_model, 3 * d_model], column blocks Q | K | V
    b_qkv: np.ndarray
    w_proj: np.ndarray
    b_proj: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray
    w_fc: np.ndarray
    b_fc: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray


@dataclass
class ModelWeights:
    """Decoder weights; the output head is tied to the token embedding."""

    wte: np.ndarray  # [vocab_size, d_model]
    wpe: np.ndarray  # [max_positions, d_model]
    layers: list[LayerWeights]
    lnf_g: np.ndarray
    lnf_b: np.ndarray

    def validate(self, config: ModelConfig) -> None:
        d = config.d_model
        expected = {
            "wte": (config.vocab_size, d),
            "wpe": (config.max_positions, d),
            "lnf_g": (d,),
            "lnf_b": (d,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ValueError(f"{name} has shape {actual}, expected {shape}")
        if len(self.layers) != config.n_layers:
            raise ValueError(f"{len(self.layers)} layers, expected {config.n_layers}")
        per_layer = {
            "ln1_g": (d,), "ln1_b": (d,),
            "w_qkv": (d, 3 * d), "b_qkv": (3 * d,),
            "w_proj": (d, d), "b_proj": (d,),
            "ln2_g": (d,), "ln2_b": (d,),
            "w_fc": (d, 4 * d), "b_fc": (4 * d,),
            "w_out": (4 * d, d), "b_out": (d,),
        }
        for i, layer in enumerate(self.layers):
            for name, shape in per_layer.items():
                actual = getattr(layer, name).shape
                if actual != shape:
                    raise ValueError(f"layer {i} {name} has shape {actual}, expected {shape}")


@dataclass(frozen=True)
class AttentionPrecisionPolicy:
    """Precision and selection rules for key-query score rows."""

    score_format: FpFormat
    tau: float = 2.0
    mode: str = MODE_OFF
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class AttentionStats:
    """Recomputed inner products against the causal-mask total."""

    recomputed_count: int = 0
    causal_pair_count: int = 0


def lamp_attention_row(q_vec, keys, policy: AttentionPrecisionPolicy, scale,
                       rng_key: tuple[int, int, int] = (0, 0, 0)):
    """Attention probabilities of one query over its first t keys.

    Baseline scores are accumulated in policy.score_format and scaled in
    float32; the selected scores are redone as plain sequential float32 dots
    and the softmax is recomputed from the updated row. Returns the final
    probabilities and how many scores were recomputed. rng_key identifies
    (layer, head, row) so random-budget draws are reproducible.
    """
    q_vec = np.asarray(q_vec, dtype=np.float32)
    keys = np.asarray(keys, dtype=np.float32)
    t = keys.shape[0]
    if t < 1 or keys.shape[1] != q_vec.shape[0]:
        raise ValueError(f"bad attention row shapes: query {q_vec.shape}, keys {keys.shape}")
    scale32 = np.float32(scale)
    products = keys * q_vec[None, :]
    scores = rounded_accumulate(products, policy.score_format) * scale32
    probs = softmax_row(scores)
    if policy.mode == MODE_OFF:
        return probs, 0
    mask = solve_lamp_greedy_softmax(probs.astype(np.float64), policy.tau)
    count = int(mask.sum())
    if policy.mode == MODE_RANDOM and count:
        rng = np.random.default_rng(np.random.SeedSequence((policy.rng_seed,) + tuple(rng_key)))
        mask = np.zeros(t, dtype=bool)
        mask[rng.choice(t, size=count, replace=False)] = True
    indices = np.flatnonzero(mask)
    if indices.size:
        scores = scores.copy()
        scores[indices] = rounded_accumulate(products[indices], FP32) * scale32
        probs = softmax_row(scores)
    return probs, count


def forward(weights: ModelWeights, config: ModelConfig, tokens,
            policy: AttentionPrecisionPolicy):
    """Full decoder pass; returns per-position logits and attention stats.

    Pre-normalization blocks, learned positional embeddings, tied output
    head. Only the key-query scores follow the precision policy; projections,
    MLPs and normalizations are plain float32.
    """
    tokens = np.asarray(tokens, dtype=np.int64)
    t = tokens.shape[0]
    if t == 0:
        raise ValueError("empty token sequence")
    if t > config.max_positions:
        raise ValueError(f"sequence length {t} exceeds max_positions {config.max_positions}")
    if tokens.min() < 0 or tokens.max() >= config.vocab_size:
        raise ValueError("token id out of range")

    dh = config.d_head
    scale = 1.0 / math.sqrt(dh)
    stats = AttentionStats()
    x = weights.wte[tokens] + weights.wpe[:t]
    for li, layer in enumerate(weights.layers):
        h = layernorm(x, layer.ln1_g, layer.ln1_b)
        qkv = h @ layer.w_qkv + layer.b_qkv
        attn = np.empty((t, config.d_model), dtype=np.float32)
        for hi in range(config.n_heads):
            q = np.ascontiguousarray(qkv[:, hi * dh:(hi + 1) * dh])
            k = np.ascontiguousarray(qkv[:, config.d_model + hi * dh:config.d_model + (hi + 1) * dh])
            v = np.ascontiguousarray(qkv[:, 2 * config.d_model + hi * dh:2 * config.d_model + (hi + 1) * dh])
            probs = np.zeros((t, t), dtype=np.float32)
            for row in range(t):
                p_row, count = lamp_attention_row(
                    q[row], k[:row + 1], policy, scale, rng_key=(li, hi, row)
                )
                probs[row, :row + 1] = p_row
                stats.recomputed_count += count
                stats.causal_pair_count += row + 1
            attn[:, hi * dh:(hi + 1) * dh] = probs @ v
        x = x + (attn @ layer.w_proj + layer.b_proj)
        h = layernorm(x, layer.ln2_g, layer.ln2_b)
        x = x + (gelu(h @ layer.w_fc + layer.b_fc) @ layer.w_out + layer.b_out)
    x = layernorm(x, weights.lnf_g, weights.lnf_b)
    logits = x @ weights.wte.T
    return logits, stats


def reference_forward(weights: ModelWeights, config: ModelConfig, tokens) -> np.ndarray:
    """Uniform float32 inference: the ground-truth comparator."""
    logits, _ = forward(weights, config, tokens, AttentionPrecisionPolicy(FP32, mode=MODE_OFF))
    return logits
