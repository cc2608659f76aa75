"""Experiment harnesses: the masking-ratio sweep and cross-domain training.

Every model a harness trains starts from the same seed, so rows differ only
in the setting under study.
"""

import dataclasses
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from src import cli_logging as log
from src.config.config_models import RunConfig
from src.data.data_models import SegmentationDataset
from src.errors import ContractError
from src.metrics.report_models import MetricsReport
from src.model.senet import SenetModel
from src.training.evaluation import evaluate
from src.training.joint import JointModel
from src.training.trainer import train_joint, train_single

MAX_SWEEP_RATIO = 0.95
DEFAULT_RATIOS = (0.0, 0.05, 0.25, 0.5, 0.75, 0.9)


@dataclass
class SweepRow:
    ratio: float
    report: MetricsReport

    @property
    def score(self) -> float:
        return self.report.score


def mask_ratio_sweep(
    base_cfg: RunConfig,
    ratios: Sequence[float],
    train_dataset: SegmentationDataset,
    test_dataset: SegmentationDataset,
    max_steps: Optional[int] = None,
    threads: Optional[int] = None,
) -> List[SweepRow]:
    """Train and evaluate once per ratio; rows follow ``ratios`` order.

    Every model starts from ``base_cfg``'s seed, so rows differ only in the
    training mask ratio. Evaluation always runs unmasked.

    Raises:
        ContractError: if a ratio lies outside [0, 0.95].
    """
    bad = [r for r in ratios if not 0.0 <= r <= MAX_SWEEP_RATIO]
    if bad:
        raise ContractError(f"sweep ratios must lie in [0, {MAX_SWEEP_RATIO}], got {bad}")
    task = train_dataset.task
    rows = []
    for ratio in ratios:
        train = dataclasses.replace(base_cfg.train, mask_ratio_train=float(ratio), paradigm="single")
        cfg = dataclasses.replace(base_cfg, train=train)
        model = SenetModel(cfg.model)
        train_single(model, train_dataset, cfg, max_steps)
        report = evaluate(model, test_dataset, task, threads)
        rows.append(SweepRow(float(ratio), report))
        log.info(f"mask ratio {ratio:.2f}: score {report.score:.4f}")
    return rows


CROSS_DOMAIN_SETTINGS = ("cod", "sod", "joint1", "joint2")


def train_cross_domain_models(
    base_cfg: RunConfig,
    cod_train: SegmentationDataset,
    sod_train: SegmentationDataset,
    max_steps: Optional[int] = None,
) -> Dict[str, SenetModel]:
    """COD-only, SOD-only, fully shared and shared-encoder models from one seed."""
    models: Dict[str, SenetModel] = {}
    for task, dataset in (("cod", cod_train), ("sod", sod_train)):
        cfg = dataclasses.replace(base_cfg, task=task)
        models[task] = train_single(SenetModel(cfg.model), dataset, cfg, max_steps).model
    for paradigm in ("joint1", "joint2"):
        cfg = dataclasses.replace(base_cfg, train=dataclasses.replace(base_cfg.train, paradigm=paradigm))
        joint = JointModel.create(cfg.model, paradigm)
        models[paradigm] = train_joint(joint, cod_train, sod_train, cfg, max_steps).model
    return models
