"""Mixed-precision accumulation with look-ahead selective recomputation."""

from .errors import ConfigError, FormatError, SingularInputError, SizeLimitError
from .fp_sim import (
    BF16,
    FP32,
    TF32,
    FpFormat,
    MixedDotSpec,
    mixed_dot,
    mixed_matmul,
    round_ps,
    rounded_accumulate,
)
from .kernels import gelu, layernorm, linear, rmsnorm, softmax_row
from .lamp import (
    UNWEIGHTED,
    WEIGHTED,
    LampMatrix,
    MixedPrecisionMatvec,
    composition_error_bound,
    condition_vector_matvec,
    lamp_evaluate,
    lamp_matrix_activation,
    lamp_matrix_dense,
    lamp_matrix_rmsnorm,
    lamp_matrix_softmax,
    masked_norm,
    solve_lamp_activation,
    solve_lamp_bruteforce,
    solve_lamp_greedy_rmsnorm,
    solve_lamp_greedy_softmax,
)
from .metrics import RunMetrics, aggregate, flip, kl_divergence
from .transformer import (
    MODE_LAMP,
    MODE_OFF,
    MODE_RANDOM,
    AttentionPrecisionPolicy,
    AttentionStats,
    LayerWeights,
    ModelConfig,
    ModelWeights,
    forward,
    lamp_attention_row,
    reference_forward,
)
from .files import read_tokens, read_weights, write_tokens, write_weights
from .harness import (
    ExperimentConfig,
    ResultRow,
    make_tiny_dataset,
    make_tiny_model,
    run_sweep,
    shuffle_sequences,
)

__version__ = "0.1.0"
