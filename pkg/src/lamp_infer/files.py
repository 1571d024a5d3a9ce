"""Binary container formats for model weights and token datasets.

Both formats are little-endian and deliberately trivial to parse:

  weights "LAMPW01":  magic, u32 tensor count, then per tensor a u16 name
  length, the UTF-8 name, a u8 rank, rank u64 dims, and the raw float32
  payload in row-major order.

  tokens  "LAMPT01":  magic, u32 sequence count, then per sequence a u32
  length followed by that many u32 token ids.

The weight container carries one metadata tensor, "n_heads" of shape (1,),
since the head count is not recoverable from the other shapes.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError
from .transformer import LayerWeights, ModelConfig, ModelWeights

WEIGHTS_MAGIC = b"LAMPW01"
TOKENS_MAGIC = b"LAMPT01"

_LAYER_FIELDS = (
    "ln1_g", "ln1_b", "w_qkv", "b_qkv", "w_proj", "b_proj",
    "ln2_g", "ln2_b", "w_fc", "b_fc", "w_out", "b_out",
)


def weight_tensor_items(weights: ModelWeights, config: ModelConfig):
    """Canonical (name, array) sequence for serialization."""
    yield "n_heads", np.array([config.n_heads], dtype=np.float32)
    yield "wte", weights.wte
    yield "wpe", weights.wpe
    for i, layer in enumerate(weights.layers):
        for field in _LAYER_FIELDS:
            yield f"h{i}.{field}", getattr(layer, field)
    yield "lnf_g", weights.lnf_g
    yield "lnf_b", weights.lnf_b


def write_weights(path, weights: ModelWeights, config: ModelConfig) -> None:
    items = list(weight_tensor_items(weights, config))
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", len(items)))
        for name, arr in items:
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.astype("<f4", copy=False).tobytes())


def read_weight_tensors(path) -> dict[str, np.ndarray]:
    """Parse a LAMPW01 file into a name -> float32 array mapping."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:7] != WEIGHTS_MAGIC:
        raise FormatError(f"bad magic {data[:7]!r}, expected {WEIGHTS_MAGIC!r}", 0)
    offset = 7
    (count,) = _unpack(data, "<I", offset)
    offset += 4
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = _unpack(data, "<H", offset)
        offset += 2
        name = _take(data, offset, name_len).decode("utf-8")
        offset += name_len
        (rank,) = _unpack(data, "<B", offset)
        offset += 1
        dims = _unpack(data, f"<{rank}Q", offset)
        offset += 8 * rank
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        payload = _take(data, offset, 4 * size)
        offset += 4 * size
        if name in tensors:
            raise FormatError(f"duplicate tensor {name!r}", offset)
        tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after last tensor", offset)
    return tensors


def read_weights(path) -> tuple[ModelWeights, ModelConfig]:
    """Load a LAMPW01 file and reconstruct the model and its configuration."""
    tensors = read_weight_tensors(path)

    def grab(name):
        if name not in tensors:
            raise FormatError(f"missing tensor {name!r}", 0)
        return tensors.pop(name)

    n_heads = int(grab("n_heads")[0])
    wte = grab("wte")
    wpe = grab("wpe")
    layers = []
    i = 0
    while f"h{i}.ln1_g" in tensors:
        layers.append(LayerWeights(*(grab(f"h{i}.{f}") for f in _LAYER_FIELDS)))
        i += 1
    weights = ModelWeights(wte, wpe, layers, grab("lnf_g"), grab("lnf_b"))
    if tensors:
        raise FormatError(f"unexpected tensors {sorted(tensors)}", 0)
    config = ModelConfig(
        n_layers=len(layers),
        n_heads=n_heads,
        d_model=wte.shape[1],
        vocab_size=wte.shape[0],
        max_positions=wpe.shape[0],
    )
    weights.validate(config)
    return weights, config


def write_tokens(path, sequences) -> None:
    with open(path, "wb") as fh:
        fh.write(TOKENS_MAGIC)
        fh.write(struct.pack("<I", len(sequences)))
        for seq in sequences:
            seq = np.asarray(seq, dtype="<u4")
            fh.write(struct.pack("<I", seq.shape[0]))
            fh.write(seq.tobytes())


def read_tokens(path) -> list[np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:7] != TOKENS_MAGIC:
        raise FormatError(f"bad magic {data[:7]!r}, expected {TOKENS_MAGIC!r}", 0)
    offset = 7
    (count,) = _unpack(data, "<I", offset)
    offset += 4
    sequences = []
    for _ in range(count):
        (length,) = _unpack(data, "<I", offset)
        offset += 4
        payload = _take(data, offset, 4 * length)
        offset += 4 * length
        sequences.append(np.frombuffer(payload, dtype="<u4").astype(np.uint32))
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after last sequence", offset)
    return sequences


def _unpack(data: bytes, fmt: str, offset: int):
    size = struct.calcsize(fmt)
    if offset + size > len(data):
        raise FormatError(f"truncated file: needed {size} bytes", offset)
    return struct.unpack_from(fmt, data, offset)


def _take(data: bytes, offset: int, size: int) -> bytes:
    if offset + size > len(data):
        raise FormatError(f"truncated file: needed {size} bytes", offset)
    return data[offset:offset + size]
