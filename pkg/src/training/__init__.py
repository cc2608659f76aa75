"""Optimisation, joint training, evaluation, sweeps and checkpoints."""

from .checkpoint_manager import (
    Checkpoint,
    build_checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    restore_model,
    save_checkpoint,
)
from .evaluation import CrossDomainCell, cross_domain_matrix, cross_domain_table, evaluate, predict_map
from .gradcheck_suite import GradCheckResult, model_gradient_errors, run_gradcheck_suite, tiny_model_config
from .joint import JointLoss, JointModel, decoders_for_paradigm, joint_loss, joint_train_step
from .optim import Adam, OptimizerState, adam_step, poly_lr
from .sweep import CROSS_DOMAIN_SETTINGS, DEFAULT_RATIOS, SweepRow, mask_ratio_sweep, train_cross_domain_models
from .trainer import StepRecord, Trainer, TrainResult, resume_trainer, train_joint, train_single, trainer_checkpoint

__all__ = [
    "Adam",
    "Checkpoint",
    "CROSS_DOMAIN_SETTINGS",
    "CrossDomainCell",
    "DEFAULT_RATIOS",
    "GradCheckResult",
    "JointLoss",
    "JointModel",
    "OptimizerState",
    "StepRecord",
    "SweepRow",
    "TrainResult",
    "Trainer",
    "adam_step",
    "build_checkpoint",
    "cross_domain_matrix",
    "cross_domain_table",
    "decode_checkpoint",
    "decoders_for_paradigm",
    "encode_checkpoint",
    "evaluate",
    "joint_loss",
    "joint_train_step",
    "load_checkpoint",
    "mask_ratio_sweep",
    "model_gradient_errors",
    "poly_lr",
    "predict_map",
    "restore_model",
    "resume_trainer",
    "run_gradcheck_suite",
    "save_checkpoint",
    "tiny_model_config",
    "train_cross_domain_models",
    "train_joint",
    "train_single",
    "trainer_checkpoint",
]
