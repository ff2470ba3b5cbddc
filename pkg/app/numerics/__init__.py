# Numerics package: autodiff tensors, gradient oracle, optimizer

from .tensor import (
    Tensor,
    as_tensor,
    add,
    sub,
    mul,
    div,
    neg,
    exp,
    gelu,
    matmul,
    transpose,
    reshape,
    take,
    concat,
    tensor_sum,
    tensor_mean,
    softmax,
    layer_norm,
    mse_loss,
    backward,
    no_grad,
    is_grad_enabled,
)
from .gradcheck import finite_diff_check, finite_diff_check_params
from .optim import Adam, AdamState, adam_step

__all__ = [
    'Tensor', 'as_tensor', 'add', 'sub', 'mul', 'div', 'neg', 'exp', 'gelu',
    'matmul', 'transpose', 'reshape', 'take', 'concat', 'tensor_sum',
    'tensor_mean', 'softmax', 'layer_norm', 'mse_loss', 'backward', 'no_grad',
    'is_grad_enabled', 'finite_diff_check', 'finite_diff_check_params',
    'Adam', 'AdamState', 'adam_step',
]
