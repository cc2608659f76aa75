"""Differentiable primitives over ``Tensor``.

All reductions run in row-major order through numpy so results are
reproducible bit for bit on a given platform.
"""

from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from src.errors import DimensionError
from src.tensor.tensor import ArrayLike, Tensor, as_tensor

BCE_CLAMP_EPS = 1e-7
LAYER_NORM_EPS = 1e-6

_SQRT_HALF = float(np.sqrt(0.5))
_INV_SQRT_2PI = float(1.0 / np.sqrt(2.0 * np.pi))


def _pair(a: ArrayLike, b: ArrayLike) -> Tuple[Tensor, Tensor]:
    """Wrap constants using the dtype of whichever operand is a Tensor."""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(b, dtype=a.dtype)
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(a, dtype=b.dtype), b
    return as_tensor(a), as_tensor(b)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` back down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "add")

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), vjp, "add")


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "sub")

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), vjp, "sub")


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "mul")

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), vjp, "mul")


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "div")
    out = a.data / b.data

    def vjp(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * out / b.data, b.shape),
        )

    return Tensor.from_op(out, (a, b), vjp, "div")


def neg(x: Tensor) -> Tensor:
    return Tensor.from_op(-x.data, (x,), lambda g: (-g,), "neg")


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return Tensor.from_op(out, (x,), lambda g: (g * out,), "exp")


def log(x: Tensor) -> Tensor:
    return Tensor.from_op(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


def sigmoid(x: Tensor) -> Tensor:
    out = special.expit(x.data).astype(x.dtype, copy=False)
    return Tensor.from_op(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def gelu(x: Tensor) -> Tensor:
    """Exact (erf-based) GELU."""
    cdf = 0.5 * (1.0 + special.erf(x.data * _SQRT_HALF))
    out = (x.data * cdf).astype(x.dtype, copy=False)

    def vjp(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.data * x.data)
        return ((g * (cdf + x.data * pdf)).astype(x.dtype, copy=False),)

    return Tensor.from_op(out, (x,), vjp, "gelu")


# ---------------------------------------------------------------------------
# reductions and shape plumbing
# ---------------------------------------------------------------------------


def sum_all(x: Tensor) -> Tensor:
    out = np.asarray(x.data.sum(), dtype=x.dtype)
    return Tensor.from_op(
        out, (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),), "sum"
    )


def mean_all(x: Tensor) -> Tensor:
    n = x.size
    out = np.asarray(x.data.mean(), dtype=x.dtype)
    return Tensor.from_op(
        out,
        (x,),
        lambda g: ((np.broadcast_to(g, x.shape) / n).astype(x.dtype),),
        "mean",
    )


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError(f"reshape: cannot view {x.shape} as {tuple(shape)}") from None
    return Tensor.from_op(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = np.transpose(x.data, axes)
    return Tensor.from_op(
        out, (x,), lambda g: (np.transpose(g, inverse),), "transpose"
    )


def take_rows(x: Tensor, indices: Sequence[int]) -> Tensor:
    """Gather rows (axis 0) of ``x``; repeated indices accumulate gradients."""
    index = np.asarray(indices, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= x.shape[0]):
        raise DimensionError(f"take_rows: index out of range for {x.shape[0]} rows")
    out = x.data[index]

    def vjp(g):
        grad = np.zeros_like(x.data)
        np.add.at(grad, index, g)
        return (grad,)

    return Tensor.from_op(out, (x,), vjp, "take_rows")


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate along axis 0."""
    parts = [as_tensor(p) for p in parts]
    trailing = {p.shape[1:] for p in parts}
    if len(trailing) != 1:
        raise DimensionError(f"concat_rows: trailing shapes differ: {sorted(trailing)}")
    out = np.concatenate([p.data for p in parts], axis=0)
    bounds = np.cumsum([0] + [p.shape[0] for p in parts])

    def vjp(g):
        return tuple(g[bounds[i] : bounds[i + 1]] for i in range(len(parts)))

    return Tensor.from_op(out, tuple(parts), vjp, "concat_rows")


def broadcast_to(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = np.broadcast_to(x.data, shape).copy()
    except ValueError:
        raise DimensionError(f"broadcast_to: {x.shape} -> {shape}") from None
    return Tensor.from_op(
        out, (x,), lambda g: (_unbroadcast(g, x.shape),), "broadcast_to"
    )


# ---------------------------------------------------------------------------
# linear algebra and convolution
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes (leading axes broadcast).

    Raises:
        DimensionError: if the inner extents differ.
    """
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    out = np.matmul(a.data, b.data)

    def vjp(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor.from_op(out, (a, b), vjp, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ weight + bias`` with ``weight`` stored as [in, out]."""
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


def conv2d_3x3_same(x: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
    """3×3 cross-correlation with one pixel of zero padding.

    Args:
        x: [..., C_in, H, W]; leading axes are an independent batch.
        kernel: [C_out, C_in, 3, 3].
        bias: [C_out].

    Returns:
        [..., C_out, H, W]

    Raises:
        DimensionError: on channel or kernel-shape mismatch.
    """
    if x.ndim < 3:
        raise DimensionError(f"conv2d_3x3_same: input needs [..., C, H, W], got {x.shape}")
    if kernel.ndim != 4 or kernel.shape[2:] != (3, 3):
        raise DimensionError(f"conv2d_3x3_same: kernel must be [Co, Ci, 3, 3], got {kernel.shape}")
    if kernel.shape[1] != x.shape[-3] or bias.shape != (kernel.shape[0],):
        raise DimensionError(
            f"conv2d_3x3_same: channels differ (input {x.shape}, kernel {kernel.shape}, bias {bias.shape})"
        )
    height, width = x.shape[-2:]
    pad = [(0, 0)] * (x.ndim - 2) + [(1, 1), (1, 1)]
    padded = np.pad(x.data, pad)
    windows = sliding_window_view(padded, (3, 3), axis=(-2, -1))
    out = np.einsum("...chwij,ocij->...ohw", windows, kernel.data)
    out = (out + bias.data[:, None, None]).astype(x.dtype, copy=False)

    def vjp(g):
        flat_g = g.reshape((-1,) + g.shape[-3:])
        flat_windows = windows.reshape((-1,) + windows.shape[-5:])
        grad_kernel = np.einsum("nohw,nchwij->ocij", flat_g, flat_windows)
        grad_bias = g.sum(axis=tuple(range(g.ndim - 3)) + (-2, -1))
        grad_padded = np.zeros_like(padded)
        for i in range(3):
            for j in range(3):
                grad_padded[..., i : i + height, j : j + width] += np.einsum(
                    "...ohw,oc->...chw", g, kernel.data[:, :, i, j]
                )
        grad_x = grad_padded[..., 1 : 1 + height, 1 : 1 + width]
        return grad_x, grad_kernel, grad_bias

    return Tensor.from_op(out, (x, kernel, bias), vjp, "conv2d_3x3_same")


# ---------------------------------------------------------------------------
# normalisation and attention helpers
# ---------------------------------------------------------------------------


def layer_norm(
    x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS
) -> Tensor:
    """Normalise over the last axis, then apply ``gamma``/``beta``.

    Raises:
        DimensionError: if the last axis is empty or the affine shapes differ.
    """
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DimensionError("layer_norm: last axis must be non-empty")
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm: affine params must be [{d}]")
    mu = x.data.mean(axis=-1, keepdims=True)
    centred = x.data - mu
    var = (centred * centred).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centred * inv_std
    out = (xhat * gamma.data + beta.data).astype(x.dtype, copy=False)

    def vjp(g):
        lead = tuple(range(g.ndim - 1))
        grad_gamma = (g * xhat).sum(axis=lead)
        grad_beta = g.sum(axis=lead)
        dxhat = g * gamma.data
        grad_x = inv_std * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        return grad_x.astype(x.dtype, copy=False), grad_gamma, grad_beta

    return Tensor.from_op(out, (x, gamma, beta), vjp, "layer_norm")


def softmax_lastdim(x: Tensor) -> Tensor:
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DimensionError("softmax_lastdim: last axis must be non-empty")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return Tensor.from_op(out, (x,), vjp, "softmax")


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def mse_mean(a: Tensor, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    if a.shape != b.shape:
        raise DimensionError(f"mse_mean: shapes {a.shape} and {b.shape} differ")
    diff = a.data - b.data
    n = diff.size
    out = np.asarray((diff * diff).mean(), dtype=a.dtype)

    def vjp(g):
        scaled = (2.0 / n) * g * diff
        return scaled, -scaled

    return Tensor.from_op(out, (a, b), vjp, "mse_mean")


def bce_map(p: Tensor, target: ArrayLike, clamp_eps: float = BCE_CLAMP_EPS) -> Tensor:
    """Per-pixel binary cross-entropy with ``p`` clamped away from 0 and 1.

    The gradient is zero wherever the clamp is active.
    """
    p, target = _pair(p, target)
    if p.shape != target.shape:
        raise DimensionError(f"bce_map: shapes {p.shape} and {target.shape} differ")
    clipped = np.clip(p.data, clamp_eps, 1.0 - clamp_eps)
    g_t = target.data
    out = -(g_t * np.log(clipped) + (1.0 - g_t) * np.log(1.0 - clipped))

    def vjp(g):
        inside = (p.data >= clamp_eps) & (p.data <= 1.0 - clamp_eps)
        dp = g * (-g_t / clipped + (1.0 - g_t) / (1.0 - clipped)) * inside
        dt = g * (np.log(1.0 - clipped) - np.log(clipped))
        return dp.astype(p.dtype, copy=False), dt

    return Tensor.from_op(out.astype(p.dtype, copy=False), (p, target), vjp, "bce_map")
