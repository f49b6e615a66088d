"""
Differentiable tensor engine: tensors, layer operations, attention, Adam,
reduce-on-plateau scheduling, checkpoints and gradient verification.
"""

# Local imports
from .attention import MHA_PARAMETER_NAMES, MHAParams, init_mha_parameters, mha_forward
from .checkpoint import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .gradcheck import grad_check
from .history import TrainingMetrics
from .ops import (
    conv1d_forward,
    conv_output_length,
    dropout_count,
    dropout_forward,
    linear_forward,
    mean_pool_forward,
    mse_loss,
    relu_forward,
    softmax_forward,
)
from .optim import OptimizerState, adam_step
from .parameters import ParameterSet, uniform_init
from .scheduler import PlateauScheduler, plateau_step
from .tensor import (
    SeedLike,
    Tensor,
    add,
    as_tensor,
    concat,
    detach,
    gather_rows,
    matmul,
    mul,
    reduce_mean,
    reduce_sum,
    reshape,
    scale,
    seed_rng,
    straight_through,
    sub,
    transpose,
)

__all__ = [
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "MHA_PARAMETER_NAMES",
    "Checkpoint",
    "MHAParams",
    "OptimizerState",
    "ParameterSet",
    "PlateauScheduler",
    "SeedLike",
    "Tensor",
    "TrainingMetrics",
    "adam_step",
    "add",
    "as_tensor",
    "concat",
    "conv1d_forward",
    "conv_output_length",
    "decode_checkpoint",
    "detach",
    "dropout_count",
    "dropout_forward",
    "encode_checkpoint",
    "gather_rows",
    "grad_check",
    "init_mha_parameters",
    "linear_forward",
    "load_checkpoint",
    "matmul",
    "mean_pool_forward",
    "mha_forward",
    "mse_loss",
    "mul",
    "plateau_step",
    "reduce_mean",
    "reduce_sum",
    "relu_forward",
    "reshape",
    "save_checkpoint",
    "scale",
    "seed_rng",
    "softmax_forward",
    "straight_through",
    "sub",
    "transpose",
    "uniform_init",
]
