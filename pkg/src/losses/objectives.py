"""Scalar training objectives built on the tensor primitives."""

from typing import Union

import numpy as np

from src.config.config_models import LossConfig
from src.errors import ContractError, DimensionError
from src.losses.targets import SoftGroundTruth, WeightMatrix
from src.model.patches import MaskPlan, patchify
from src.tensor import ops
from src.tensor.tensor import Tensor, as_tensor

Scalar = Union[Tensor, float]


def dw_seg_loss(
    pred: Tensor,
    gt: Union[SoftGroundTruth, np.ndarray],
    w: Union[WeightMatrix, np.ndarray],
    cfg: LossConfig,
) -> Tensor:
    """Weighted BCE plus weighted IoU loss.

    ``bce = Σ(w·bce_map) / Σw`` and
    ``iou = 1 − (Σ(w·p·g) + s) / (Σ(w·(p + g − p·g)) + s)`` with ``s = iou_smooth``.

    Raises:
        DimensionError: if the three maps differ in extent.
    """
    pred = as_tensor(pred)
    target = gt.values if isinstance(gt, SoftGroundTruth) else np.asarray(gt, dtype=np.float64)
    weights = w.values if isinstance(w, WeightMatrix) else np.asarray(w, dtype=np.float64)
    if pred.shape != target.shape or target.shape != weights.shape:
        raise DimensionError(
            f"pred {pred.shape}, gt {target.shape} and weights {weights.shape} must share extents"
        )
    weight_sum = float(weights.sum())
    bce = ops.sum_all(ops.bce_map(pred, target, cfg.bce_clamp_eps) * weights) / weight_sum

    overlap = pred * target
    inter = ops.sum_all(overlap * weights)
    union = ops.sum_all((pred + target - overlap) * weights)
    iou = 1.0 - (inter + cfg.iou_smooth) / (union + cfg.iou_smooth)
    return bce + iou


def recon_loss(recon: Tensor, image: Union[Tensor, np.ndarray], plan: MaskPlan, p: int) -> Tensor:
    """Mean squared error over the pixels of masked patches only.

    Returns an exact zero constant when nothing is masked.

    Raises:
        DimensionError: if ``recon`` and ``image`` differ in extent.
    """
    recon = as_tensor(recon)
    target = image.data if isinstance(image, Tensor) else np.asarray(image)
    if recon.shape != target.shape:
        raise DimensionError(f"reconstruction {recon.shape} and image {target.shape} differ")
    if plan.masked.size == 0:
        return Tensor(0.0, dtype=recon.dtype)
    predicted = ops.take_rows(patchify(recon, p), plan.masked)
    expected = patchify(Tensor(target, dtype=recon.dtype), p).data[plan.masked]
    return ops.mse_mean(predicted, expected)


def total_loss(l_recon: Scalar, l_seg: Scalar, lam: float) -> Scalar:
    """``lam·l_recon + (1 − lam)·l_seg``.

    Raises:
        ContractError: if ``lam`` is outside [0, 1].
    """
    if not 0.0 <= lam <= 1.0:
        raise ContractError(f"lambda must lie in [0, 1], got {lam}")
    if isinstance(l_recon, Tensor) or isinstance(l_seg, Tensor):
        return as_tensor(l_recon) * lam + as_tensor(l_seg) * (1.0 - lam)
    return lam * l_recon + (1.0 - lam) * l_seg
