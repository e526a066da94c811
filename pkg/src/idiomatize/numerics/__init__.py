"""Float64 tensor core: autodiff tape, GRU cells, Adam, gradient checks."""

from .gradcheck import grad_check
from .gru import GruCell, bigru_encode, gru_run, gru_step
from .optim import INIT_SCALE, ParamStore, adam_step, global_grad_norm
from .tensor import (
    NumericError,
    Tensor,
    add,
    concat,
    exp,
    getitem,
    log,
    logsumexp,
    matmul,
    mul,
    neg,
    no_grad,
    reshape,
    sigmoid,
    softmax,
    softplus,
    stack,
    sub,
    take,
    take_pairs,
    tanh,
    tsum,
    zeros,
)

__all__ = [
    "INIT_SCALE",
    "GruCell",
    "NumericError",
    "ParamStore",
    "Tensor",
    "adam_step",
    "add",
    "bigru_encode",
    "concat",
    "exp",
    "getitem",
    "global_grad_norm",
    "grad_check",
    "gru_run",
    "gru_step",
    "log",
    "logsumexp",
    "matmul",
    "mul",
    "neg",
    "no_grad",
    "reshape",
    "sigmoid",
    "softmax",
    "softplus",
    "stack",
    "sub",
    "take",
    "take_pairs",
    "tanh",
    "tsum",
    "zeros",
]
