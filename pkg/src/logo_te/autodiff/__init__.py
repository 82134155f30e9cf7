"""Dense float64 tensors with reverse-mode gradients, Adam, and gradient checking."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import check_gradients
from .optim import Adam, AdamState, adam_step, xavier_bound, xavier_init
from .tensor import Tensor, no_grad

__all__ = [
    "Adam", "AdamState", "Tensor", "adam_step", "check_gradients", "load_checkpoint",
    "no_grad", "save_checkpoint", "xavier_bound", "xavier_init",
]
