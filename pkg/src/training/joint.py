"""Joint COD+SOD training: one shared network, or a shared encoder with per-task decoders."""

from dataclasses import dataclass
from typing import Dict, Sequence

from src.config.config_models import ModelConfig, RunConfig
from src.data.data_models import Sample
from src.errors import ContractError
from src.model.params import DEFAULT_DECODER
from src.model.senet import SenetModel
from src.tensor.prng import Prng
from src.tensor.tensor import Tensor
from src.training.batches import BatchLoss, batch_loss
from src.training.optim import Adam

JOINT_PARADIGMS = ("joint1", "joint2")


def decoders_for_paradigm(paradigm: str) -> Sequence[str]:
    if paradigm == "joint2":
        return ("decoder_cod", "decoder_sod")
    return (DEFAULT_DECODER,)


class JointModel:
    """A ``SenetModel`` trained on both tasks.

    ``joint1`` shares every parameter; ``joint2`` shares the encoder and
    gives each task its own decoder path.
    """

    def __init__(self, model: SenetModel, paradigm: str):
        if paradigm not in JOINT_PARADIGMS:
            raise ContractError(f"joint training needs paradigm joint1 or joint2, got {paradigm}")
        expected = tuple(decoders_for_paradigm(paradigm))
        if model.decoders != expected:
            raise ContractError(f"{paradigm} needs decoders {expected}, model has {model.decoders}")
        self.model = model
        self.paradigm = paradigm

    @classmethod
    def create(cls, cfg: ModelConfig, paradigm: str) -> "JointModel":
        return cls(SenetModel(cfg, decoders_for_paradigm(paradigm)), paradigm)

    def decoder_for(self, task: str) -> str:
        return self.model.decoder_for(task)


@dataclass
class JointLoss:
    combined: Tensor
    cod: BatchLoss
    sod: BatchLoss

    @property
    def cod_loss(self) -> float:
        return self.cod.value

    @property
    def sod_loss(self) -> float:
        return self.sod.value


def joint_loss(
    joint: JointModel,
    cod_batch: Sequence[Sample],
    sod_batch: Sequence[Sample],
    cfg: RunConfig,
    rng: Prng,
) -> JointLoss:
    """``(cod_loss + sod_loss) / 2``, each batch routed through its task's decoder.

    The COD batch draws from ``rng`` before the SOD batch.
    """
    if not cod_batch or not sod_batch:
        raise ContractError("joint training needs a non-empty batch for both tasks")
    use_recon = cfg.train.joint_recon
    cod = batch_loss(joint.model, joint.decoder_for("cod"), cod_batch, cfg, rng, use_recon)
    sod = batch_loss(joint.model, joint.decoder_for("sod"), sod_batch, cfg, rng, use_recon)
    return JointLoss((cod.total + sod.total) * 0.5, cod, sod)


def joint_train_step(
    joint: JointModel,
    cod_batch: Sequence[Sample],
    sod_batch: Sequence[Sample],
    cfg: RunConfig,
    optimizer: Adam,
    rng: Prng,
    lr: float,
) -> JointLoss:
    """One backward pass over the averaged loss and one optimizer step.

    Raises:
        ContractError: if the run is configured for single-task training.
    """
    if cfg.train.paradigm == "single":
        raise ContractError("joint_train_step called for a single-task run")
    optimizer.zero_grad()
    loss = joint_loss(joint, cod_batch, sod_batch, cfg, rng)
    loss.combined.backward()
    optimizer.step(lr)
    optimizer.zero_grad()
    return loss


def split_by_task(datasets) -> Dict[str, object]:
    by_task = {}
    for dataset in datasets:
        task = dataset.task
        if task in by_task:
            raise ContractError(f"two datasets share task {task}")
        by_task[task] = dataset
    return by_task
