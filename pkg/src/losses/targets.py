"""Soft ground truth and per-pixel loss weights."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from src.config.config_models import LossConfig
from src.data.transforms import resize
from src.errors import DegenerateTargetError, DimensionError

# 8-connected neighbourhood used to widen the boundary band.
BAND_STRUCTURE = np.ones((3, 3), dtype=bool)
PPA_WINDOW = 31
PPA_GAIN = 5.0


@dataclass(frozen=True)
class SoftGroundTruth:
    """Target map in [0, 1]; bilinear resizing leaves fractional values on transitions."""

    values: np.ndarray
    source: str

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class WeightMatrix:
    """Per-pixel weights. For the dynamic scheme every entry is 1 or ``alpha``."""

    values: np.ndarray
    alpha: float
    l: float  # noqa: E741
    s_img: int
    s_obj: int


def soft_gt(mask: np.ndarray, height: int, width: int, mode: str = "bilinear") -> SoftGroundTruth:
    """Resize a binary mask to ``height``×``width``.

    Raises:
        DimensionError: if ``mask`` is empty.
    """
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 2 or mask.size == 0:
        raise DimensionError(f"mask must be a non-empty 2D array, got shape {mask.shape}")
    values = resize(mask, height, width, mode)
    if mode == "nearest":
        values = (values > 0.5).astype(np.float64)
    return SoftGroundTruth(values=values, source=mode)


def _values(gt) -> np.ndarray:
    return gt.values if isinstance(gt, SoftGroundTruth) else np.asarray(gt, dtype=np.float64)


def object_area(gt) -> int:
    return int(np.count_nonzero(_values(gt) > 0.5))


def boundary_band(gt, cfg: LossConfig) -> np.ndarray:
    """Transition pixels ``band_lo < gt < band_hi``, dilated ``band_dilation`` times."""
    values = _values(gt)
    band = (values > cfg.band_lo) & (values < cfg.band_hi)
    if cfg.band_dilation > 0 and band.any():
        band = ndimage.binary_dilation(band, structure=BAND_STRUCTURE, iterations=cfg.band_dilation)
    return band


def weight_matrix(gt, cfg: LossConfig) -> WeightMatrix:
    """Dynamic weights: ``alpha = min(l·S_img/S_obj, alpha_cap)`` on the boundary band, 1 elsewhere.

    Raises:
        DegenerateTargetError: if no pixel exceeds 0.5.
    """
    values = _values(gt)
    s_img = int(values.size)
    s_obj = object_area(values)
    if s_obj == 0:
        raise DegenerateTargetError("ground truth has no foreground pixel; boundary weight is undefined")
    alpha = min(cfg.l * s_img / s_obj, cfg.alpha_cap)
    weights = np.where(boundary_band(values, cfg), alpha, 1.0)
    return WeightMatrix(values=weights, alpha=float(alpha), l=cfg.l, s_img=s_img, s_obj=s_obj)


def uniform_weights(gt) -> WeightMatrix:
    values = _values(gt)
    return WeightMatrix(
        values=np.ones_like(values), alpha=1.0, l=0.0, s_img=int(values.size), s_obj=object_area(values)
    )


def ppa_weights(gt) -> WeightMatrix:
    """Pixel-position-aware baseline: ``1 + 5·|avgpool31(gt) − gt|`` with zero padding."""
    values = _values(gt)
    local = ndimage.uniform_filter(values, size=PPA_WINDOW, mode="constant", cval=0.0)
    weights = 1.0 + PPA_GAIN * np.abs(local - values)
    return WeightMatrix(
        values=weights, alpha=float(weights.max()), l=0.0, s_img=int(values.size), s_obj=object_area(values)
    )


def build_weights(gt, cfg: LossConfig) -> WeightMatrix:
    """Weights for the configured scheme (``dw``, ``none`` or ``ppa``)."""
    if cfg.weighting == "dw":
        return weight_matrix(gt, cfg)
    if cfg.weighting == "ppa":
        return ppa_weights(gt)
    return uniform_weights(gt)
