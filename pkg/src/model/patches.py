"""Patch tokenisation and random masking bookkeeping."""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.errors import ContractError, DimensionError
from src.tensor import ops
from src.tensor.prng import Prng
from src.tensor.tensor import Tensor, as_tensor

ImageLike = Union[Tensor, np.ndarray]


def patchify(image: ImageLike, p: int) -> Tensor:
    """Split ``[c, H, W]`` into row-major patches, each flattened channel-major.

    Token ``i`` holds the patch at grid row ``i // (W/p)``, column ``i % (W/p)``.

    Returns:
        Tensor ``[N, c·p·p]``.

    Raises:
        DimensionError: if H or W is not a multiple of ``p``.
    """
    image = as_tensor(image)
    if image.ndim != 3:
        raise DimensionError(f"patchify expects [c, H, W], got {image.shape}")
    c, height, width = image.shape
    if p <= 0 or height % p or width % p:
        raise DimensionError(f"extents {height}x{width} are not divisible by patch size {p}")
    gh, gw = height // p, width // p
    grid = ops.reshape(image, (c, gh, p, gw, p))
    grid = ops.transpose(grid, (1, 3, 0, 2, 4))
    return ops.reshape(grid, (gh * gw, c * p * p))


def unpatchify(tokens: ImageLike, p: int, c: int) -> Tensor:
    """Inverse of ``patchify`` for a square patch grid.

    Raises:
        DimensionError: if the token width is not ``c·p·p`` or N is not a square.
    """
    tokens = as_tensor(tokens)
    if tokens.ndim != 2 or tokens.shape[1] != c * p * p:
        raise DimensionError(f"tokens {tokens.shape} do not hold {c}x{p}x{p} patches")
    n = tokens.shape[0]
    g = math.isqrt(n)
    if g * g != n:
        raise DimensionError(f"token count {n} is not a square grid")
    grid = ops.reshape(tokens, (g, g, c, p, p))
    grid = ops.transpose(grid, (2, 0, 3, 1, 4))
    return ops.reshape(grid, (c, g * p, g * p))


def masked_count(n: int, ratio: float) -> int:
    """round(ratio·n) with halves rounded away from zero."""
    return int(math.floor(ratio * n + 0.5))


@dataclass(frozen=True)
class MaskPlan:
    """Which token indices the encoder sees and which the decoder must fill.

    Both index arrays are sorted ascending; together they are a permutation
    of ``0 .. N-1``.
    """

    visible: np.ndarray
    masked: np.ndarray
    ratio: float

    @property
    def num_tokens(self) -> int:
        return int(self.visible.size + self.masked.size)

    @property
    def restore_order(self) -> np.ndarray:
        """Row order that maps ``[visible; masked]`` back to grid order."""
        return np.argsort(np.concatenate([self.visible, self.masked]), kind="stable")

    def masked_pixels(self, p: int, grid: int) -> np.ndarray:
        """Boolean ``[grid·p, grid·p]`` map of the pixels inside masked patches."""
        flags = np.zeros(grid * grid, dtype=bool)
        flags[self.masked] = True
        return np.kron(flags.reshape(grid, grid), np.ones((p, p), dtype=bool)).astype(bool)


def make_mask_plan(n: int, ratio: float, rng: Optional[Prng] = None) -> MaskPlan:
    """Mask the first ``round(ratio·n)`` entries of a shuffle of ``0 .. n-1``.

    At ``ratio = 0`` no draw is taken and ``rng`` may be None.

    Raises:
        ContractError: if ``ratio`` is outside ``[0, 1)`` or a draw is needed
            without ``rng``.
    """
    if not 0.0 <= ratio < 1.0:
        raise ContractError(f"masking ratio must lie in [0, 1), got {ratio}")
    k = masked_count(n, ratio)
    if k == 0:
        return MaskPlan(np.arange(n, dtype=np.int64), np.zeros(0, dtype=np.int64), ratio)
    if rng is None:
        raise ContractError("a random source is required for a nonzero masking ratio")
    order = rng.permutation(n)
    masked = np.sort(order[:k]).astype(np.int64)
    visible = np.sort(order[k:]).astype(np.int64)
    return MaskPlan(visible, masked, ratio)


@dataclass
class TokenSequence:
    """Token rows plus the grid index each row came from."""

    tokens: Tensor
    positions: np.ndarray

    def __post_init__(self):
        if self.tokens.ndim != 2 or self.tokens.shape[0] != len(self.positions):
            raise DimensionError(
                f"{self.tokens.shape[0] if self.tokens.ndim else 0} token rows for "
                f"{len(self.positions)} positions"
            )

    def __len__(self) -> int:
        return self.tokens.shape[0]

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]
