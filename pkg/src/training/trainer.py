"""Training loop for single-task and joint runs.

A run is a pure function of (seed, config, data): batch order for step ``s``
is derived from ``(seed, task slot, pass number)`` and the only carried
random state is the flip/mask stream, which checkpoints save. Training can
therefore stop after any step and resume bit-exactly.
"""

import dataclasses
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src import cli_logging as log
from src.config.config_models import RunConfig
from src.data.data_models import SegmentationDataset
from src.errors import ContractError
from src.model.senet import SenetModel
from src.tensor.prng import Prng
from src.training.batches import batch_loss
from src.training.checkpoint_manager import Checkpoint, build_checkpoint, restore_model
from src.training.joint import JointModel, joint_train_step, split_by_task
from src.training.optim import Adam, OptimizerState, poly_lr

STEP_STREAM = 2
ORDER_STREAM = 3


@dataclass
class StepRecord:
    """One row of the loss trace; ``step`` is the 0-based optimizer step."""

    step: int
    lr: float
    l_recon: float
    l_seg: float
    l_total: float
    cod_loss: Optional[float] = None
    sod_loss: Optional[float] = None


class Trainer:
    """Drives Adam with the poly schedule over one or two datasets."""

    def __init__(
        self,
        model: SenetModel,
        cfg: RunConfig,
        datasets: Sequence[SegmentationDataset],
        optimizer_state: Optional[OptimizerState] = None,
    ):
        self.model = model
        self.cfg = cfg
        self.paradigm = cfg.train.paradigm
        if not datasets or any(len(d) == 0 for d in datasets):
            raise ContractError("training needs non-empty datasets")

        if self.paradigm == "single":
            if len(datasets) != 1:
                raise ContractError("single-task training takes exactly one dataset")
            task = datasets[0].task
            self.slots = [(task, datasets[0])]
            self.joint = None
        else:
            by_task = split_by_task(datasets)
            if set(by_task) != {"cod", "sod"}:
                raise ContractError("joint training needs one cod and one sod dataset")
            self.slots = [("cod", by_task["cod"]), ("sod", by_task["sod"])]
            self.joint = JointModel(model, self.paradigm)

        self.optimizer = Adam(model.params, optimizer_state)
        self.rng = Prng.from_key(cfg.train.seed, STEP_STREAM)
        self.step = 0
        self.trace: List[StepRecord] = []

    # -- schedule ------------------------------------------------------------

    def _batches_per_pass(self, slot: int) -> int:
        return math.ceil(len(self.slots[slot][1]) / self.cfg.train.batch_size)

    @property
    def steps_per_epoch(self) -> int:
        return min(self._batches_per_pass(i) for i in range(len(self.slots)))

    @property
    def total_steps(self) -> int:
        return self.cfg.train.epochs * self.steps_per_epoch

    @property
    def epoch(self) -> int:
        return self.step // self.steps_per_epoch

    @property
    def finished(self) -> bool:
        return self.step >= self.total_steps

    def batch_indices(self, slot: int, step: int) -> np.ndarray:
        """Sample indices of ``slot`` used at ``step``; longer datasets cycle."""
        n = len(self.slots[slot][1])
        size = self.cfg.train.batch_size
        pass_number, batch = divmod(step, self._batches_per_pass(slot))
        order = Prng.from_key(self.cfg.train.seed, ORDER_STREAM, slot, pass_number).permutation(n)
        return order[batch * size : (batch + 1) * size]

    def _batch(self, slot: int, step: int):
        dataset = self.slots[slot][1]
        return [dataset[int(i)] for i in self.batch_indices(slot, step)]

    # -- stepping ------------------------------------------------------------

    def train_step(self) -> StepRecord:
        if self.finished:
            raise ContractError("training already reached its final step")
        train = self.cfg.train
        lr = poly_lr(self.step, self.total_steps, train.lr0, train.poly_power)

        if self.joint is None:
            self.optimizer.zero_grad()
            task = self.slots[0][0]
            loss = batch_loss(self.model, self.model.decoder_for(task), self._batch(0, self.step), self.cfg, self.rng)
            loss.total.backward()
            self.optimizer.step(lr)
            self.optimizer.zero_grad()
            record = StepRecord(self.step, lr, loss.l_recon, loss.l_seg, loss.value)
        else:
            result = joint_train_step(
                self.joint,
                self._batch(0, self.step),
                self._batch(1, self.step),
                self.cfg,
                self.optimizer,
                self.rng,
                lr,
            )
            record = StepRecord(
                self.step,
                lr,
                0.5 * (result.cod.l_recon + result.sod.l_recon),
                0.5 * (result.cod.l_seg + result.sod.l_seg),
                result.combined.item(),
                cod_loss=result.cod_loss,
                sod_loss=result.sod_loss,
            )

        if not np.isfinite(record.l_total):
            log.warning(f"non-finite loss at step {self.step}")
        self.trace.append(record)
        self.step += 1
        return record

    def run(self, max_steps: Optional[int] = None) -> List[StepRecord]:
        """Train until the schedule ends or ``max_steps`` more steps have run.

        Returns:
            Records produced by this call.
        """
        produced: List[StepRecord] = []
        per_epoch = self.steps_per_epoch
        while not self.finished and (max_steps is None or len(produced) < max_steps):
            record = self.train_step()
            produced.append(record)
            log.verbose(f"step {record.step} lr {record.lr:.3e} loss {record.l_total:.5f}")
            if self.step % per_epoch == 0:
                log.info(
                    f"epoch {self.epoch}/{self.cfg.train.epochs}: "
                    f"l_total {record.l_total:.4f} l_seg {record.l_seg:.4f} l_recon {record.l_recon:.4f}"
                )
        return produced


@dataclass
class TrainResult:
    model: SenetModel
    trace: List[StepRecord]


def train_single(
    model: SenetModel,
    dataset: SegmentationDataset,
    cfg: RunConfig,
    max_steps: Optional[int] = None,
) -> TrainResult:
    """Train ``model`` on one task's dataset with the mixed objective.

    Raises:
        ContractError: on an empty dataset or a dataset mixing tasks.
    """
    if len(dataset) == 0:
        raise ContractError("cannot train on an empty dataset")
    single = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, paradigm="single"))
    trainer = Trainer(model, single, [dataset])
    trainer.run(max_steps)
    return TrainResult(model, trainer.trace)


def train_joint(
    joint: JointModel,
    cod_dataset: SegmentationDataset,
    sod_dataset: SegmentationDataset,
    cfg: RunConfig,
    max_steps: Optional[int] = None,
) -> TrainResult:
    if cfg.train.paradigm != joint.paradigm:
        cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, paradigm=joint.paradigm))
    trainer = Trainer(joint.model, cfg, [cod_dataset, sod_dataset])
    trainer.run(max_steps)
    return TrainResult(joint.model, trainer.trace)


def trainer_checkpoint(trainer: Trainer) -> Checkpoint:
    """Snapshot parameters, optimizer, random stream and step counter."""
    return build_checkpoint(
        trainer.model,
        trainer.cfg,
        optimizer=trainer.optimizer.state,
        rng_state=trainer.rng.get_state(),
        step=trainer.step,
        epoch=trainer.epoch,
    )


def resume_trainer(
    ckpt: Checkpoint,
    datasets: Sequence[SegmentationDataset],
    cfg: Optional[RunConfig] = None,
) -> Trainer:
    """Rebuild a trainer that continues where ``ckpt`` stopped.

    With ``cfg`` the run continues under that configuration (schedule and
    loss settings may change); without it the saved configuration is reused
    and the continuation is bit-exact.

    Raises:
        ContractError: if ``cfg`` describes another architecture or paradigm.
    """
    saved = ckpt.run_config()
    if cfg is None:
        cfg = saved
    elif cfg.model != saved.model or cfg.train.paradigm != saved.train.paradigm:
        raise ContractError("resume configuration must keep the checkpoint's model and paradigm")
    model = restore_model(ckpt)
    trainer = Trainer(model, cfg, datasets, optimizer_state=ckpt.optimizer_state())
    if ckpt.rng_state is not None:
        trainer.rng.set_state(ckpt.rng_state)
    trainer.step = ckpt.step
    return trainer
