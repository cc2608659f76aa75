"""Per-sample preparation and the batch objective shared by every paradigm."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from src.config.config_models import RunConfig
from src.data.data_models import Sample
from src.data.transforms import augment_hflip, resize_bilinear
from src.errors import ContractError
from src.losses.objectives import dw_seg_loss, recon_loss, total_loss
from src.losses.targets import SoftGroundTruth, WeightMatrix, build_weights, soft_gt
from src.model.senet import SenetModel
from src.tensor.prng import Prng
from src.tensor.tensor import Tensor


@dataclass
class PreparedSample:
    name: str
    image: np.ndarray  # [3, S, S] at model resolution
    gt: SoftGroundTruth
    weights: WeightMatrix


@dataclass
class BatchLoss:
    """Batch means of the three objectives; ``total`` keeps the graph."""

    total: Tensor
    l_recon: float
    l_seg: float

    @property
    def value(self) -> float:
        return self.total.item()


def prepare_sample(sample: Sample, cfg: RunConfig, rng: Prng, augment: bool = True) -> PreparedSample:
    """Resize to model resolution, build the soft target, optionally flip."""
    size = cfg.model.img_size
    image = resize_bilinear(sample.image, size, size)
    target = soft_gt(sample.mask, size, size, cfg.loss.gt_resize).values
    if augment and cfg.train.hflip:
        image, target = augment_hflip(image, target, rng)
    gt = SoftGroundTruth(values=target, source=cfg.loss.gt_resize)
    return PreparedSample(sample.name, image, gt, build_weights(gt, cfg.loss))


def batch_loss(
    model: SenetModel,
    decoder: str,
    samples: Sequence[Sample],
    cfg: RunConfig,
    rng: Prng,
    use_recon: bool = True,
) -> BatchLoss:
    """Mean over ``samples`` of the per-sample mixed objective.

    Draws from ``rng`` per sample, in order: one flip decision (when
    flipping is enabled), then one shuffle (when the ratio masks anything).

    Raises:
        ContractError: on an empty batch.
    """
    if not samples:
        raise ContractError("batch is empty")
    lam = cfg.loss.lam if use_recon else 0.0
    totals: List[Tensor] = []
    recon_values: List[float] = []
    seg_values: List[float] = []
    for sample in samples:
        prepared = prepare_sample(sample, cfg, rng)
        plan = model.make_plan(cfg.train.mask_ratio_train, rng)
        recon, pred = model.forward(prepared.image, plan, decoder)
        l_seg = dw_seg_loss(pred, prepared.gt, prepared.weights, cfg.loss)
        l_recon = recon_loss(recon, prepared.image, plan, cfg.model.patch_size)
        totals.append(total_loss(l_recon, l_seg, lam))
        recon_values.append(l_recon.item())
        seg_values.append(l_seg.item())

    combined = totals[0]
    for item in totals[1:]:
        combined = combined + item
    combined = combined * (1.0 / len(totals))
    return BatchLoss(combined, float(np.mean(recon_values)), float(np.mean(seg_values)))
