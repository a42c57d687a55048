"""From-scratch differentiable core shared by the three analyses."""

from .checkpoint import Checkpoint, load, save
from .core import (
    DenseLayer, binary_cross_entropy_with_logits, cross_entropy, dense_backward, dense_forward,
    global_norm, log_softmax, sgd_step, sigmoid, softmax, softmax_cross_entropy,
)
from .gradcheck import GradReport, grad_check, relative_error
from .lstm import (
    LstmCell, bilstm_backward, bilstm_encode, bilstm_forward, lstm_backward, lstm_forward, lstm_step,
)

__all__ = [
    "Checkpoint", "DenseLayer", "GradReport", "LstmCell", "binary_cross_entropy_with_logits",
    "bilstm_backward", "bilstm_encode", "bilstm_forward", "cross_entropy", "dense_backward",
    "dense_forward", "global_norm", "grad_check", "load", "log_softmax", "lstm_backward",
    "lstm_forward", "lstm_step", "relative_error", "save", "sgd_step", "sigmoid", "softmax",
    "softmax_cross_entropy",
]
