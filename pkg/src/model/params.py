"""Named parameter tree and fixed positional tables."""

from collections import OrderedDict
from typing import Iterator, List, Mapping, NamedTuple, Sequence, Tuple

import numpy as np

from src.config.config_models import ModelConfig
from src.errors import ContractError
from src.tensor.prng import Prng
from src.tensor.tensor import Tensor, resolve_dtype

INIT_STD = 0.02
ENCODER_PREFIX = "encoder"
DEFAULT_DECODER = "decoder"

NORMAL, ZEROS, ONES = "normal", "zeros", "ones"


class ParamSpec(NamedTuple):
    name: str
    shape: Tuple[int, ...]
    init: str
    licm: bool = False


def sincos_1d(dim: int, positions: np.ndarray) -> np.ndarray:
    omega = np.arange(dim // 2, dtype=np.float64) / (dim / 2.0)
    omega = 1.0 / 10000**omega
    out = np.einsum("m,d->md", positions.reshape(-1).astype(np.float64), omega)
    return np.concatenate([np.sin(out), np.cos(out)], axis=1)


def sincos_2d(dim: int, grid: int) -> np.ndarray:
    """Fixed ``[grid·grid, dim]`` table; half the channels encode rows, half columns."""
    if dim % 4:
        raise ContractError(f"sin-cos positions need dim divisible by 4, got {dim}")
    rows, cols = np.meshgrid(np.arange(grid), np.arange(grid), indexing="ij")
    return np.concatenate([sincos_1d(dim // 2, rows), sincos_1d(dim // 2, cols)], axis=1)


def _linear(name: str, fan_in: int, fan_out: int, zero: bool = False, licm: bool = False) -> List[ParamSpec]:
    return [
        ParamSpec(f"{name}.weight", (fan_in, fan_out), ZEROS if zero else NORMAL, licm),
        ParamSpec(f"{name}.bias", (fan_out,), ZEROS, licm),
    ]


def _norm(name: str, dim: int, licm: bool = False) -> List[ParamSpec]:
    return [ParamSpec(f"{name}.gamma", (dim,), ONES, licm), ParamSpec(f"{name}.beta", (dim,), ZEROS, licm)]


def _licm(name: str, dim: int, cfg: ModelConfig) -> List[ParamSpec]:
    c, p = cfg.licm_channels, cfg.patch_size
    return (
        _linear(f"{name}.fc_in", dim, c * p * p, licm=True)
        + [
            ParamSpec(f"{name}.conv.weight", (c, c, 3, 3), NORMAL, True),
            ParamSpec(f"{name}.conv.bias", (c,), ZEROS, True),
        ]
        # Zero output projection: the branch contributes nothing at step 0.
        + _linear(f"{name}.fc_out", c * p * p, dim, zero=True, licm=True)
    )


def block_specs(prefix: str, dim: int, cfg: ModelConfig) -> List[ParamSpec]:
    specs = (
        _linear(f"{prefix}.attn.qkv", dim, 3 * dim)
        + _linear(f"{prefix}.attn.proj", dim, dim)
        + _linear(f"{prefix}.mlp.fc1", dim, cfg.mlp_ratio * dim)
        + _linear(f"{prefix}.mlp.fc2", cfg.mlp_ratio * dim, dim)
        + _norm(f"{prefix}.norm_attn", dim)
        + _norm(f"{prefix}.norm_mlp", dim)
    )
    if cfg.licm_enabled:
        specs += (
            _licm(f"{prefix}.licm_a", dim, cfg)
            + _licm(f"{prefix}.licm_b", dim, cfg)
            + _norm(f"{prefix}.norm_licm_a", dim, licm=True)
            + _norm(f"{prefix}.norm_licm_b", dim, licm=True)
        )
    return specs


def encoder_specs(cfg: ModelConfig) -> List[ParamSpec]:
    p = cfg.patch_size
    specs = _linear(f"{ENCODER_PREFIX}.patch_embed", p * p * 3, cfg.enc_dim)
    for i in range(cfg.enc_depth):
        specs += block_specs(f"{ENCODER_PREFIX}.blocks.{i}", cfg.enc_dim, cfg)
    return specs


def decoder_specs(prefix: str, cfg: ModelConfig) -> List[ParamSpec]:
    p = cfg.patch_size
    specs = _linear(f"{prefix}.embed", cfg.enc_dim, cfg.dec_dim)
    specs.append(ParamSpec(f"{prefix}.mask_token", (cfg.dec_dim,), NORMAL))
    for i in range(cfg.dec_depth):
        specs += block_specs(f"{prefix}.blocks.{i}", cfg.dec_dim, cfg)
    specs += _linear(f"{prefix}.recon_head", cfg.dec_dim, p * p * 3)
    specs += _linear(f"{prefix}.seg_trunk", cfg.dec_dim, p * p * cfg.head_channels)
    specs += _linear(f"{prefix}.seg_conv", cfg.head_channels, 1)
    return specs


class SenetParams:
    """Ordered mapping from unique dotted path to trainable leaf tensor.

    LICM parameters draw from their own stream, so toggling LICM leaves every
    other initial value unchanged.
    """

    def __init__(self, tensors: "OrderedDict[str, Tensor]"):
        self._tensors = tensors

    @classmethod
    def initialise(cls, cfg: ModelConfig, decoders: Sequence[str] = (DEFAULT_DECODER,)) -> "SenetParams":
        dtype = resolve_dtype(cfg.dtype)
        specs = encoder_specs(cfg)
        for prefix in decoders:
            specs += decoder_specs(prefix, cfg)

        main_rng = Prng(cfg.seed)
        licm_rng = Prng.from_key(cfg.seed, 1)
        tensors: "OrderedDict[str, Tensor]" = OrderedDict()
        for spec in specs:
            if spec.name in tensors:
                raise ContractError(f"duplicate parameter path: {spec.name}")
            values = _draw(spec, licm_rng if spec.licm else main_rng)
            tensors[spec.name] = Tensor(values, requires_grad=True, dtype=dtype)
        return cls(tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    def values(self):
        return self._tensors.values()

    def names(self) -> List[str]:
        return list(self._tensors)

    def with_prefix(self, prefix: str) -> "OrderedDict[str, Tensor]":
        lead = prefix + "."
        return OrderedDict((k, v) for k, v in self._tensors.items() if k.startswith(lead))

    def num_scalars(self) -> int:
        return sum(t.size for t in self._tensors.values())

    def zero_grad(self) -> None:
        for tensor in self._tensors.values():
            tensor.zero_grad()

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((k, v.data.copy()) for k, v in self._tensors.items())

    def load_arrays(self, arrays: Mapping[str, np.ndarray], strict: bool = True) -> List[str]:
        """Copy matching arrays into the tree.

        Returns:
            Names present here but absent from ``arrays``. With ``strict``
            nothing may be absent.

        Raises:
            ContractError: on unknown names, shape mismatches, or (strict)
                absent names.
        """
        unknown = [k for k in arrays if k not in self._tensors]
        if unknown:
            raise ContractError(f"unknown parameter names: {', '.join(unknown[:5])}")
        missing = [k for k in self._tensors if k not in arrays]
        if missing and strict:
            raise ContractError(f"missing parameters: {', '.join(missing[:5])}")
        for name, value in arrays.items():
            target = self._tensors[name]
            if tuple(value.shape) != target.shape:
                raise ContractError(f"{name}: shape {tuple(value.shape)} != {target.shape}")
            target.data = np.array(value, dtype=target.dtype, order="C")
        return missing


def _draw(spec: ParamSpec, rng: Prng) -> np.ndarray:
    if spec.init == NORMAL:
        return rng.truncated_normal(spec.shape, std=INIT_STD)
    if spec.init == ZEROS:
        return np.zeros(spec.shape)
    if spec.init == ONES:
        return np.ones(spec.shape)
    raise ContractError(f"unknown init kind: {spec.init}")
