"""Writers and readers for the LAMPW01 / LAMPT01 binary containers.

This is an independent implementation of the formats consumed by the
inference package; it talks to that package only through the bytes on disk.

  LAMPW01: magic, u32 tensor count; per tensor u16 name length, UTF-8 name,
  u8 rank, rank x u64 dims, raw little-endian float32 payload (row-major).

  LAMPT01: magic, u32 sequence count; per sequence u32 length, then that
  many u32 token ids.
"""

from __future__ import annotations

import struct

import numpy as np

WEIGHTS_MAGIC = b"LAMPW01"
TOKENS_MAGIC = b"LAMPT01"


def write_weight_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    """Serialize named float32 tensors in the given (insertion) order."""
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.astype("<f4", copy=False).tobytes())


def read_weight_tensors(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:7] != WEIGHTS_MAGIC:
        raise ValueError(f"not a LAMPW01 file: magic {data[:7]!r}")
    offset = 7
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<B", data, offset)
        offset += 1
        dims = struct.unpack_from(f"<{rank}Q", data, offset)
        offset += 8 * rank
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        tensors[name] = np.frombuffer(data, dtype="<f4", count=size,
                                      offset=offset).reshape(dims).copy()
        offset += 4 * size
    return tensors


def write_token_sequences(path, sequences) -> None:
    with open(path, "wb") as fh:
        fh.write(TOKENS_MAGIC)
        fh.write(struct.pack("<I", len(sequences)))
        for seq in sequences:
            arr = np.asarray(seq, dtype="<u4")
            fh.write(struct.pack("<I", arr.shape[0]))
            fh.write(arr.tobytes())


def read_token_sequences(path) -> list[np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:7] != TOKENS_MAGIC:
        raise ValueError(f"not a LAMPT01 file: magic {data[:7]!r}")
    offset = 7
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    out = []
    for _ in range(count):
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        out.append(np.frombuffer(data, dtype="<u4", count=length, offset=offset).copy())
        offset += 4 * length
    return out
