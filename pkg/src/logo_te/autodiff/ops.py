"""Differentiable primitives. Each returns a Tensor whose backward closure maps
the output gradient to one gradient per parent."""

import numpy as np

from .. import kernels
from ..errors import ShapeMismatch
from .tensor import Tensor, as_tensor, make


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make(a.data + b.data, (a, b),
                lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make(a.data - b.data, (a, b),
                lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make(a.data * b.data, (a, b),
                lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def add_n(tensors):
    """Sum of same-shape tensors, accumulated left to right."""
    tensors = [as_tensor(t) for t in tensors]
    shape = tensors[0].shape
    if any(t.shape != shape for t in tensors):
        raise ShapeMismatch(f"add_n over shapes {[t.shape for t in tensors]}")
    out = tensors[0].data.copy()
    for t in tensors[1:]:
        out += t.data
    return make(out, tensors, lambda g: [g] * len(tensors))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != b.shape[0] or b.ndim != 2:
        raise ShapeMismatch(f"matmul {a.shape} @ {b.shape}")

    def backward(g):
        ga = g @ b.data.T
        gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return make(a.data @ b.data, (a, b), backward)


def transpose(a):
    return make(a.data.T, (a,), lambda g: (g.T,))


def reshape(a, shape):
    return make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def total(a):
    """Sum of every element."""
    return make(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def tanh(a):
    y = np.tanh(a.data)
    return make(y, (a,), lambda g: (g * (1.0 - y * y),))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a):
    y = _sigmoid(a.data)
    return make(y, (a,), lambda g: (g * y * (1.0 - y),))


def leaky_relu(a, slope):
    """``x`` for positives, ``slope * x`` otherwise; ``slope`` may be an array."""
    scale = np.where(a.data > 0, 1.0, slope)
    return make(a.data * scale, (a,), lambda g: (g * scale,))


def relu(a):
    return leaky_relu(a, 0.0)


def gather_rows(table, idx):
    table = as_tensor(table)
    idx = np.asarray(idx, dtype=np.int64)
    n = table.shape[0]

    def backward(g):
        flat = g.reshape(-1, *table.shape[1:]) if table.ndim > 1 else g.reshape(-1, 1)
        out = kernels.segment_sum(flat.reshape(flat.shape[0], -1), idx.reshape(-1), n)
        return (out.reshape(table.shape),)

    return make(table.data[idx], (table,), backward)


def segment_sum(values, index, n_rows):
    """Scatter-add rows of ``values`` into an ``n_rows``-row result."""
    index = np.asarray(index, dtype=np.int64)
    out = kernels.segment_sum(values.data, index, n_rows)
    return make(out, (values,), lambda g: (g[index],))


def concat_rows(tensors):
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[0] for t in tensors])[:-1]
    return make(np.concatenate([t.data for t in tensors], axis=0), tensors,
                lambda g: np.split(g, sizes, axis=0))


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    return make(np.stack([t.data for t in tensors], axis=axis), tensors,
                lambda g: [np.take(g, i, axis=axis) for i in range(len(tensors))])


def conv1d_same(x, weight, bias=None):
    """Cross-correlation of ``x`` (B, C_in, L) with ``weight`` (C_out, C_in, k), zero
    "same" padding (k odd). Returns (B, C_out, L)."""
    B, cin, L = x.shape
    cout, cin_w, k = weight.shape
    if cin != cin_w or k % 2 != 1:
        raise ShapeMismatch(f"conv1d input {x.shape} with kernel {weight.shape}")
    pad = k // 2
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)  # (B, cin, L, k)
    out = np.einsum("bcln,ocn->bol", win, weight.data, optimize=True)
    parents = [x, weight]
    if bias is not None:
        out = out + bias.data[None, :, None]
        parents.append(bias)

    def backward(g):
        gw = np.einsum("bcln,bol->ocn", win, g, optimize=True)
        gxp = np.zeros_like(xp)
        for n in range(k):
            gxp[:, :, n:n + L] += np.einsum("bol,oc->bcl", g, weight.data[:, :, n], optimize=True)
        grads = [gxp[:, :, pad:pad + L], gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2)))
        return grads

    return make(out, parents, backward)


def log_softmax_np(logits):
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax_np(logits):
    return np.exp(log_softmax_np(logits))


def softmax_cross_entropy(logits, targets):
    """Sum over rows of ``-log softmax(logits)[row, target]``."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ShapeMismatch(f"logits {logits.shape} vs targets {targets.shape}")
    logp = log_softmax_np(logits.data)
    rows = np.arange(len(targets))
    value = -logp[rows, targets].sum()

    def backward(g):
        grad = np.exp(logp)
        grad[rows, targets] -= 1.0
        return (grad * g,)

    return make(np.asarray(value), (logits,), backward)


__all__ = [
    "Tensor", "add", "sub", "mul", "add_n", "matmul", "transpose", "reshape", "total",
    "tanh", "sigmoid", "leaky_relu", "relu", "gather_rows", "segment_sum", "concat_rows",
    "stack", "conv1d_same", "softmax_cross_entropy", "softmax_np", "log_softmax_np",
]
