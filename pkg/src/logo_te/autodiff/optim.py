"""Xavier initialization and the Adam optimizer."""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ShapeMismatch, ZeroExtent
from .tensor import Tensor


def fans(shape):
    shape = tuple(int(n) for n in shape)
    if len(shape) == 1:
        return shape[0], shape[0]
    receptive = int(np.prod(shape[2:])) if len(shape) > 2 else 1
    return shape[1] * receptive, shape[0] * receptive


def xavier_bound(shape):
    fan_in, fan_out = fans(shape)
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def xavier_init(shape, seed, requires_grad=True, name=None):
    """Uniform Xavier/Glorot initialization on ``[-b, b]``, ``b = sqrt(6/(fan_in+fan_out))``.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    shape = tuple(int(n) for n in shape)
    if not shape or any(n <= 0 for n in shape):
        raise ZeroExtent(f"cannot initialize shape {shape}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    b = xavier_bound(shape)
    return Tensor(rng.uniform(-b, b, size=shape), requires_grad=requires_grad, name=name)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, param, **kw):
        return cls(np.zeros_like(param), np.zeros_like(param), **kw)


def adam_step(param, grad, state, lr, weight_decay=0.0):
    """One Adam update with bias correction and L2 weight decay folded into the gradient.

    Returns ``(new_param, new_state)``; inputs are not modified.
    """
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if param.shape != grad.shape or state.m.shape != param.shape:
        raise ShapeMismatch(f"param {param.shape}, grad {grad.shape}, state {state.m.shape}")
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    g = grad + weight_decay * param if weight_decay else grad
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    new_param = param - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_param, replace(state, m=m, v=v, step=step)


class Adam:
    """Adam over a name -> Tensor mapping; updates tensors in place."""

    def __init__(self, params, lr=1e-3, weight_decay=0.0, betas=(0.9, 0.999), eps=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.state = {name: AdamState.zeros_like(p.data, beta1=betas[0], beta2=betas[1], eps=eps)
                      for name, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        for name, p in self.params.items():
            grad = p.grad if p.grad is not None else np.zeros_like(p.data)
            p.data, self.state[name] = adam_step(p.data, grad, self.state[name], self.lr, self.weight_decay)
