"""Masked segmentation network: patch tokens, masking, LICM blocks, heads."""

from src.model.layers import block_forward, licm_forward, mhsa, mlp
from src.model.params import DEFAULT_DECODER, ENCODER_PREFIX, SenetParams, sincos_2d
from src.model.patches import MaskPlan, TokenSequence, make_mask_plan, masked_count, patchify, unpatchify
from src.model.senet import SenetModel

__all__ = [
    "DEFAULT_DECODER",
    "ENCODER_PREFIX",
    "MaskPlan",
    "SenetModel",
    "SenetParams",
    "TokenSequence",
    "block_forward",
    "licm_forward",
    "make_mask_plan",
    "masked_count",
    "mhsa",
    "mlp",
    "patchify",
    "sincos_2d",
    "unpatchify",
]
