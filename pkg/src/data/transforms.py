"""Resizing and augmentation shared by data loading, losses and evaluation."""

from typing import Tuple

import numpy as np

from src.errors import DimensionError
from src.tensor.prng import Prng


def _axis_taps(n_in: int, n_out: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source indices and fractions for half-pixel-centre sampling along one axis."""
    dst = np.arange(n_out, dtype=np.float64)
    src = (dst + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def _check_target(values: np.ndarray, height: int, width: int) -> None:
    if values.ndim < 2 or values.shape[-1] == 0 or values.shape[-2] == 0:
        raise DimensionError(f"cannot resize an empty array of shape {values.shape}")
    if height <= 0 or width <= 0:
        raise DimensionError(f"target extent must be positive, got {height}x{width}")


def resize_bilinear(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of the last two axes with half-pixel centres.

    Works for masks ``[h, w]`` and images ``[c, h, w]``. Each output is
    ``v0 + f·(v1 − v0)`` per axis, so identity resizes and constant inputs
    come back unchanged, and the result never leaves the input range.
    """
    values = np.asarray(values, dtype=np.float64)
    _check_target(values, height, width)
    r0, r1, fr = _axis_taps(values.shape[-2], height)
    c0, c1, fc = _axis_taps(values.shape[-1], width)

    top = values[..., r0, :]
    rows = top + fr[:, None] * (values[..., r1, :] - top)
    left = rows[..., c0]
    out = left + fc * (rows[..., c1] - left)
    return np.clip(out, values.min(), values.max())


def resize_nearest(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbour resize of the last two axes (half-pixel centres)."""
    values = np.asarray(values, dtype=np.float64)
    _check_target(values, height, width)
    h_in, w_in = values.shape[-2:]
    rows = np.minimum(np.floor((np.arange(height) + 0.5) * h_in / height), h_in - 1).astype(np.int64)
    cols = np.minimum(np.floor((np.arange(width) + 0.5) * w_in / width), w_in - 1).astype(np.int64)
    return values[..., rows, :][..., cols]


def resize(values: np.ndarray, height: int, width: int, mode: str = "bilinear") -> np.ndarray:
    if mode == "bilinear":
        return resize_bilinear(values, height, width)
    if mode == "nearest":
        return resize_nearest(values, height, width)
    raise ValueError(f"Unknown resize mode: {mode}")


def augment_hflip(image: np.ndarray, mask: np.ndarray, rng: Prng) -> Tuple[np.ndarray, np.ndarray]:
    """Mirror image and mask together about the vertical axis with probability 0.5.

    Exactly one draw is taken from ``rng`` per call.
    """
    if image.shape[-2:] != mask.shape[-2:]:
        raise DimensionError(f"image {image.shape} and mask {mask.shape} extents differ")
    if rng.random() < 0.5:
        return np.ascontiguousarray(image[..., ::-1]), np.ascontiguousarray(mask[..., ::-1])
    return image, mask
