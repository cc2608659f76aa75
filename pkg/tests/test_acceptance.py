"""End-to-end training checks on the desk-scale model; run with ``-m slow``."""

import numpy as np
import pytest

from src.config.config_models import LossConfig, ModelConfig, RunConfig, SynthConfig, TrainConfig
from src.data import synthetic_dataset
from src.metrics import binary_iou, mae_metric
from src.model import SenetModel
from src.training import evaluate, mask_ratio_sweep, predict_map, train_single

pytestmark = pytest.mark.slow


def desk_config(mask_ratio, epochs, batch_size=8, lr0=1e-3, mode="cod"):
    """img 64, patch 8, encoder 64/2, decoder 32/1, lambda 0.1."""
    return RunConfig(
        task=mode,
        model=ModelConfig(seed=0),
        loss=LossConfig(lam=0.1),
        train=TrainConfig(
            lr0=lr0, epochs=epochs, batch_size=batch_size, mask_ratio_train=mask_ratio, seed=0, hflip=False
        ),
        synth=SynthConfig(size=64, seed=0, mode=mode),
    )


@pytest.fixture(scope="module")
def overfit_run():
    # Contrasting targets; the object separates from the background by colour.
    cfg = desk_config(mask_ratio=0.05, epochs=300, lr0=2e-3, mode="sod")
    data = synthetic_dataset(cfg.synth, 8)
    result = train_single(SenetModel(cfg.model), data, cfg)
    return result, data


def test_overfit_reaches_low_segmentation_loss(overfit_run):
    result, _ = overfit_run
    assert len(result.trace) == 300
    assert min(r.l_seg for r in result.trace) < 0.1


def test_overfit_total_loss_drops_fivefold(overfit_run):
    result, _ = overfit_run
    assert result.trace[-1].l_total < 0.2 * result.trace[0].l_total


def test_overfit_memorises_training_set(overfit_run):
    result, data = overfit_run
    ious = [binary_iou(predict_map(result.model, s.image, "sod"), s.mask) for s in data]
    assert np.mean(ious) > 0.9
    maes = [mae_metric(predict_map(result.model, s.image, "sod"), s.mask) for s in data]
    assert np.mean(maes) < 0.1
    assert evaluate(result.model, data, "sod").mae < 0.05


def test_reconstruction_error_halves():
    cfg = desk_config(mask_ratio=0.25, epochs=200)
    result = train_single(SenetModel(cfg.model), synthetic_dataset(cfg.synth, 8), cfg)
    first = result.trace[0].l_recon
    last = np.mean([r.l_recon for r in result.trace[-5:]])
    assert first > 0.0
    assert last < 0.5 * first


def test_ratio_zero_trains_on_segmentation_only():
    cfg = desk_config(mask_ratio=0.0, epochs=20)
    result = train_single(SenetModel(cfg.model), synthetic_dataset(cfg.synth, 8), cfg)
    assert all(r.l_recon == 0.0 for r in result.trace)
    assert all(r.l_total == pytest.approx(0.9 * r.l_seg, rel=1e-6) for r in result.trace)


def test_extreme_masking_does_not_beat_light_masking():
    base = desk_config(mask_ratio=0.05, epochs=40, batch_size=4)
    train = synthetic_dataset(base.synth, 8)
    test = synthetic_dataset(base.synth, 4, start=8)
    rows = mask_ratio_sweep(base, [0.0, 0.05, 0.25, 0.5, 0.75, 0.9], train, test)
    assert [r.ratio for r in rows] == [0.0, 0.05, 0.25, 0.5, 0.75, 0.9]
    by_ratio = {r.ratio: r.score for r in rows}
    assert by_ratio[0.9] <= by_ratio[0.05]
