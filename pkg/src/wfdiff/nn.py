"""Neural-network primitives with analytic backward passes.

Every forward returns ``(output, cache)`` and the matching ``*_backward``
takes the upstream gradient and that cache. Batched arrays put the batch axis
first; reductions over the batch go through ``matmul``/``sum`` in array order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .rng import Rng


@dataclass
class ParamTensor:
    name: str
    values: np.ndarray
    grad: np.ndarray = field(default=None, repr=False)
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        if self.m is None:
            self.m = np.zeros_like(self.values)
        if self.v is None:
            self.v = np.zeros_like(self.values)

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad[...] = 0


# ---------------------------------------------------------------- conv

def conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray):
    """3x3 cross-correlation, stride 1, zero padding 1. x is (B, C_in, H, W)."""
    B, cin, H, W = x.shape
    cout, kin, kh, kw = kernels.shape
    if kin != cin:
        raise ValueError(f"conv2d channel mismatch: input has {cin}, kernels expect {kin}")
    if (kh, kw) != (3, 3):
        raise ValueError("conv2d supports 3x3 kernels only")
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))  # B, C, H, W, 3, 3
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * H * W, cin * 9)
    y = cols @ kernels.reshape(cout, -1).T + bias
    y = y.reshape(B, H, W, cout).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(y), (cols, x.shape, kernels)


def conv2d_backward(dy: np.ndarray, cache):
    cols, xshape, kernels = cache
    B, cin, H, W = xshape
    cout = kernels.shape[0]
    dyr = dy.transpose(0, 2, 3, 1).reshape(B * H * W, cout)
    dk = (dyr.T @ cols).reshape(kernels.shape)
    db = dyr.sum(axis=0)
    dcols = (dyr @ kernels.reshape(cout, -1)).reshape(B, H, W, cin, 3, 3)
    dxp = np.zeros((B, cin, H + 2, W + 2), dtype=dy.dtype)
    for i in range(3):
        for j in range(3):
            dxp[:, :, i:i + H, j:j + W] += dcols[..., i, j].transpose(0, 3, 1, 2)
    return dxp[:, :, 1:-1, 1:-1], dk, db


# ---------------------------------------------------------------- pointwise / dense

def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def silu(x):
    return x * sigmoid(x), x


def silu_backward(dy, cache):
    x = cache
    s = sigmoid(x)
    return dy * s * (1 + x * (1 - s))


def dense(x, weight, bias):
    """y = x W^T + b with W shaped (out, in)."""
    return x @ weight.T + bias, (x, weight)


def dense_backward(dy, cache):
    x, weight = cache
    return dy @ weight, dy.T @ x, dy.sum(axis=0)


def time_embedding(t, dim: int) -> np.ndarray:
    """Sinusoidal embedding; ``t`` may be a scalar or 1D array of steps."""
    if dim % 2:
        raise ValueError(f"time embedding dim must be even, got {dim}")
    t = np.asarray(t, dtype=np.float64)
    freqs = 10000.0 ** (-np.arange(0, dim, 2) / dim)
    ang = t[..., None] * freqs
    emb = np.empty(t.shape + (dim,))
    emb[..., 0::2] = np.sin(ang)
    emb[..., 1::2] = np.cos(ang)
    return emb


# ---------------------------------------------------------------- attention

def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def cross_attention(q, k, v):
    """Single-head softmax(QK^T / sqrt(d)) V. Shapes (..., P, d), (..., S, d), (..., S, d)."""
    d = q.shape[-1]
    if k.shape[-1] != d or v.shape[-1] != d or k.shape[-2] != v.shape[-2]:
        raise ValueError(f"attention shape mismatch: q {q.shape}, k {k.shape}, v {v.shape}")
    scale = 1.0 / math.sqrt(d)
    a = softmax(q @ np.swapaxes(k, -1, -2) * scale)
    return a @ v, (q, k, v, a, scale)


def cross_attention_backward(dout, cache):
    q, k, v, a, scale = cache
    dv = np.swapaxes(a, -1, -2) @ dout
    da = dout @ np.swapaxes(v, -1, -2)
    dlogits = a * (da - np.sum(da * a, axis=-1, keepdims=True))
    dq = dlogits @ k * scale
    dk = np.swapaxes(dlogits, -1, -2) @ q * scale
    return dq, dk, dv


# ---------------------------------------------------------------- optimizer

def adam_update(param: ParamTensor, lr: float, step: int,
                beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> ParamTensor:
    """In-place Adam step with bias correction; returns ``param``."""
    if step < 1:
        raise ValueError("adam step counter starts at 1")
    g = param.grad
    param.m[...] = beta1 * param.m + (1 - beta1) * g
    param.v[...] = beta2 * param.v + (1 - beta2) * g * g
    m_hat = param.m / (1 - beta1 ** step)
    v_hat = param.v / (1 - beta2 ** step)
    param.values[...] = param.values - lr * m_hat / (np.sqrt(v_hat) + eps)
    return param


# ---------------------------------------------------------------- checking

def init_kernel(rng: Rng, shape, fan_in: int, dtype=np.float64):
    return (math.sqrt(2.0 / fan_in) * rng.normal(shape)).astype(dtype)


def grad_check(loss_fn, params: list[ParamTensor], eps: float = 1e-5,
               coords: int = 200, rng: Rng | None = None, atol: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn()`` evaluates the loss at the current parameter values and fills
    each ``param.grad``. Relative error per coordinate is
    ``|a - n| / max(|a|, |n|, atol)``. Non-finite values return ``inf``.
    """
    if not (1e-6 <= eps <= 1e-4):
        raise ValueError(f"eps {eps} outside [1e-6, 1e-4]")
    rng = rng or Rng(0)
    for p in params:
        p.zero_grad()
    loss_fn()
    analytic = {p.name: p.grad.copy() for p in params}
    worst = 0.0
    for p in params:
        flat = p.values.reshape(-1)
        n = flat.size
        idx = np.arange(n) if n <= coords else np.sort(np.argsort(rng.uniform(n), kind="stable")[:coords])
        ga = analytic[p.name].reshape(-1)
        for i in idx:
            old = flat[i]
            # divide by the step actually representable at this magnitude
            hi, lo = old + eps, old - eps
            flat[i] = hi
            fp = loss_fn()
            flat[i] = lo
            fm = loss_fn()
            flat[i] = old
            num = (fp - fm) / (hi - lo)
            a = ga[i]
            if not (np.isfinite(num) and np.isfinite(a)):
                return math.inf
            err = abs(a - num) / max(abs(a), abs(num), atol)
            worst = max(worst, err)
    for p in params:
        p.grad[...] = analytic[p.name]
    return worst
