import numpy as np
import pytest

from lamp_infer import make_tiny_dataset, make_tiny_model
from lamp_infer.harness import CSV_COLUMNS


@pytest.fixture(scope="session")
def tiny_model():
    return make_tiny_model(seed=0)


@pytest.fixture(scope="session")
def tiny_tokens():
    cfg, _ = make_tiny_model(seed=0)
    return [s.astype(np.int64) for s in make_tiny_dataset(0, 4, 96, cfg.vocab_size)]


def softmax_rows(logits):
    """Row softmax in float32, the distribution used for model comparison."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def mask_wall_time(text: str) -> str:
    """CSV text with the wall_time_seconds column blanked.

    Wall time is the one measured (hence run-varying) column; every other
    column is required to reproduce byte-for-byte.
    """
    idx = CSV_COLUMNS.index("wall_time_seconds")
    out = []
    for line in text.splitlines():
        parts = line.split(",")
        parts[idx] = "X"
        out.append(",".join(parts))
    return "\n".join(out)
