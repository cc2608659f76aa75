"""Transformer block pieces: attention, MLP, LICM and the block itself.

Every function takes the parameter tree plus a dotted ``prefix`` and reads
``<prefix>.<part>.weight`` style entries from it.
"""

import math
from typing import Mapping

from src.errors import DimensionError
from src.tensor import ops
from src.tensor.tensor import Tensor

Params = Mapping[str, Tensor]


def _linear(x: Tensor, params: Params, name: str) -> Tensor:
    return ops.linear(x, params[f"{name}.weight"], params[f"{name}.bias"])


def _norm(x: Tensor, params: Params, name: str) -> Tensor:
    return ops.layer_norm(x, params[f"{name}.gamma"], params[f"{name}.beta"])


def mhsa(x: Tensor, params: Params, prefix: str, heads: int) -> Tensor:
    """Multi-head scaled dot-product self-attention over ``[N, D]`` tokens."""
    n, dim = x.shape
    if dim % heads:
        raise DimensionError(f"dim {dim} is not divisible by {heads} heads")
    head_dim = dim // heads
    qkv = _linear(x, params, f"{prefix}.qkv")
    qkv = ops.transpose(ops.reshape(qkv, (n, 3, heads, head_dim)), (1, 2, 0, 3))
    q, k, v = (ops.reshape(ops.take_rows(qkv, [i]), (heads, n, head_dim)) for i in range(3))
    scores = ops.matmul(q, ops.transpose(k, (0, 2, 1))) * (1.0 / math.sqrt(head_dim))
    attn = ops.softmax_lastdim(scores)
    out = ops.matmul(attn, v)
    out = ops.reshape(ops.transpose(out, (1, 0, 2)), (n, dim))
    return _linear(out, params, f"{prefix}.proj")


def mlp(x: Tensor, params: Params, prefix: str) -> Tensor:
    return _linear(ops.gelu(_linear(x, params, f"{prefix}.fc1")), params, f"{prefix}.fc2")


def licm_forward(x: Tensor, params: Params, prefix: str, p: int, channels: int) -> Tensor:
    """Local information capture on each token independently.

    linear D -> c·p², view as ``[c, p, p]``, 3×3 same conv, flatten, linear back
    to D. Tokens form the batch axis of the conv, so nothing mixes across them.
    """
    n, dim = x.shape
    hidden = _linear(x, params, f"{prefix}.fc_in")
    if hidden.shape[1] != channels * p * p:
        raise DimensionError(f"{prefix}.fc_in yields {hidden.shape[1]} features, expected {channels * p * p}")
    maps = ops.reshape(hidden, (n, channels, p, p))
    maps = ops.conv2d_3x3_same(maps, params[f"{prefix}.conv.weight"], params[f"{prefix}.conv.bias"])
    return _linear(ops.reshape(maps, (n, channels * p * p)), params, f"{prefix}.fc_out")


def block_forward(
    x: Tensor,
    params: Params,
    prefix: str,
    heads: int,
    p: int,
    licm_channels: int,
    licm_enabled: bool = True,
) -> Tensor:
    """One block with sublayer outputs normalised before the residual add.

        X1 = X  + LN(MHSA(X))  + LN(LICM_a(X))
        X2 = X1 + LN(MLP(X1))  + LN(LICM_b(X1))

    With ``licm_enabled`` false the LICM terms are dropped entirely.
    """
    h = x + _norm(mhsa(x, params, f"{prefix}.attn", heads), params, f"{prefix}.norm_attn")
    if licm_enabled:
        local = licm_forward(x, params, f"{prefix}.licm_a", p, licm_channels)
        h = h + _norm(local, params, f"{prefix}.norm_licm_a")

    out = h + _norm(mlp(h, params, f"{prefix}.mlp"), params, f"{prefix}.norm_mlp")
    if licm_enabled:
        local = licm_forward(h, params, f"{prefix}.licm_b", p, licm_channels)
        out = out + _norm(local, params, f"{prefix}.norm_licm_b")
    return out
