"""Differentiable compute core: tensors, layers, losses, and optimization."""

from .tensor import (
    Tensor,
    add,
    concat_last,
    constant,
    conv1d,
    gather_rows,
    matmul,
    mul,
    parameter,
    relu,
    reshape,
    scale,
    segment_pool,
    tmean,
    tsum,
)
from .layers import (
    ConvStack,
    Mlp,
    apply_conv_stack,
    apply_mlp,
    conv_stack_for,
    conv_stack_params,
    init_bias,
    init_weight,
    mlp_params,
    widths_for_window,
)
from .losses import masked_mse, softmax_cross_entropy
from .optim import Adam, PlateauSchedule

__all__ = [
    "Adam",
    "ConvStack",
    "Mlp",
    "PlateauSchedule",
    "Tensor",
    "add",
    "apply_conv_stack",
    "apply_mlp",
    "concat_last",
    "constant",
    "conv1d",
    "conv_stack_for",
    "conv_stack_params",
    "gather_rows",
    "init_bias",
    "init_weight",
    "masked_mse",
    "matmul",
    "mlp_params",
    "mul",
    "parameter",
    "relu",
    "reshape",
    "scale",
    "segment_pool",
    "softmax_cross_entropy",
    "tmean",
    "tsum",
    "widths_for_window",
]
