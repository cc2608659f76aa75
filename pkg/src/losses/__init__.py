"""Soft targets, boundary weighting and the training objectives."""

from src.losses.objectives import dw_seg_loss, recon_loss, total_loss
from src.losses.targets import (
    SoftGroundTruth,
    WeightMatrix,
    boundary_band,
    build_weights,
    object_area,
    ppa_weights,
    soft_gt,
    uniform_weights,
    weight_matrix,
)

__all__ = [
    "SoftGroundTruth",
    "WeightMatrix",
    "boundary_band",
    "build_weights",
    "dw_seg_loss",
    "object_area",
    "ppa_weights",
    "recon_loss",
    "soft_gt",
    "total_loss",
    "uniform_weights",
    "weight_matrix",
]
