"""Tests for the binary checkpoint format and bit-exact training resume."""

import dataclasses
import json
import struct

import numpy as np
import pytest

from src.config.config_models import LossConfig, RunConfig, SynthConfig, TrainConfig
from src.data import synthetic_dataset
from src.errors import CheckpointError, ContractError
from src.model import SenetModel
from src.training import (
    Trainer,
    build_checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    restore_model,
    resume_trainer,
    save_checkpoint,
    tiny_model_config,
    trainer_checkpoint,
)
from src.training.checkpoint_manager import FORMAT_VERSION, MAGIC


def run_config(dtype="float64"):
    model = dataclasses.replace(tiny_model_config(seed=2), dtype=dtype)
    return RunConfig(
        model=model,
        loss=LossConfig(),
        train=TrainConfig(lr0=1e-3, epochs=3, batch_size=2, mask_ratio_train=0.25, seed=2),
        synth=SynthConfig(size=16),
    )


def dataset():
    return synthetic_dataset(SynthConfig(size=16, seed=8), 4)


def trained_trainer(steps=2):
    cfg = run_config()
    trainer = Trainer(SenetModel(cfg.model), cfg, [dataset()])
    trainer.run(steps)
    return trainer


# -- format -------------------------------------------------------------------


def test_header_layout():
    blob = encode_checkpoint(build_checkpoint(SenetModel(run_config().model), run_config()))
    magic, version, length = struct.unpack_from("<4sIQ", blob)
    assert magic == MAGIC == b"SENC"
    assert version == FORMAT_VERSION
    manifest = json.loads(blob[16 : 16 + length])
    assert manifest["tensors"][0]["name"] == "encoder.patch_embed.weight"
    assert manifest["tensors"][0]["dtype"] == "float64"


def test_roundtrip_is_bit_identical(tmp_path):
    trainer = trained_trainer()
    ckpt = trainer_checkpoint(trainer)
    path = save_checkpoint(tmp_path / "model.senc", ckpt)
    loaded = load_checkpoint(path)
    assert list(loaded.tensors) == list(ckpt.tensors)
    for name, array in ckpt.tensors.items():
        assert loaded.tensors[name].dtype == array.dtype
        np.testing.assert_array_equal(loaded.tensors[name], array)
    assert encode_checkpoint(loaded) == path.read_bytes()
    assert loaded.step == 2
    assert loaded.optimizer_t == 2


def test_float32_roundtrip(tmp_path):
    cfg = run_config(dtype="float32")
    model = SenetModel(cfg.model)
    path = save_checkpoint(tmp_path / "f32.senc", build_checkpoint(model, cfg))
    restored = restore_model(load_checkpoint(path))
    for name, tensor in model.params.items():
        assert restored.params[name].dtype == np.float32
        np.testing.assert_array_equal(restored.params[name].data, tensor.data)


def test_restored_model_predicts_identically():
    trainer = trained_trainer()
    restored = restore_model(decode_checkpoint(encode_checkpoint(trainer_checkpoint(trainer))))
    image = dataset()[0].image
    np.testing.assert_array_equal(restored.forward_inference(image), trainer.model.forward_inference(image))


def test_no_temp_file_left_behind(tmp_path):
    cfg = run_config()
    save_checkpoint(tmp_path / "m.senc", build_checkpoint(SenetModel(cfg.model), cfg))
    assert [p.name for p in tmp_path.iterdir()] == ["m.senc"]


# -- errors -------------------------------------------------------------------


def _blob():
    cfg = run_config()
    return encode_checkpoint(build_checkpoint(SenetModel(cfg.model), cfg))


def test_bad_magic():
    blob = b"XXXX" + _blob()[4:]
    with pytest.raises(CheckpointError, match="magic"):
        decode_checkpoint(blob)


def test_unsupported_version():
    blob = bytearray(_blob())
    struct.pack_into("<I", blob, 4, FORMAT_VERSION + 1)
    with pytest.raises(CheckpointError, match="version"):
        decode_checkpoint(bytes(blob))


@pytest.mark.parametrize("keep", [3, 20, -8])
def test_truncation(keep):
    blob = _blob()
    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(blob[:keep])


def test_trailing_bytes():
    with pytest.raises(CheckpointError, match="trailing"):
        decode_checkpoint(_blob() + b"\x00")


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.senc")


def test_unknown_parameter_name_is_rejected():
    cfg = run_config()
    ckpt = build_checkpoint(SenetModel(cfg.model), cfg)
    ckpt.tensors["encoder.extra.weight"] = np.zeros((2, 2))
    with pytest.raises(CheckpointError, match="unknown"):
        restore_model(decode_checkpoint(encode_checkpoint(ckpt)))
    with pytest.raises(CheckpointError, match="unknown"):
        restore_model(ckpt, strict=False)


def test_missing_parameter_needs_non_strict_restore():
    cfg = run_config()
    source = SenetModel(cfg.model)
    ckpt = build_checkpoint(source, cfg)
    del ckpt.tensors["decoder.seg_conv.bias"]
    with pytest.raises(CheckpointError, match="missing"):
        restore_model(ckpt)
    model = restore_model(ckpt, strict=False)
    np.testing.assert_array_equal(
        model.params["encoder.patch_embed.weight"].data, source.params["encoder.patch_embed.weight"].data
    )


def test_shape_mismatch_is_rejected():
    cfg = run_config()
    ckpt = build_checkpoint(SenetModel(cfg.model), cfg)
    ckpt.tensors["decoder.seg_conv.bias"] = np.zeros(2)
    with pytest.raises(CheckpointError):
        restore_model(ckpt)


# -- resume -------------------------------------------------------------------


def test_resume_matches_uninterrupted_run():
    cfg = run_config()
    data = dataset()

    straight = Trainer(SenetModel(cfg.model), cfg, [data])
    straight.run(6)

    first = Trainer(SenetModel(cfg.model), cfg, [data])
    first.run(3)
    blob = encode_checkpoint(trainer_checkpoint(first))
    resumed = resume_trainer(decode_checkpoint(blob), [data])
    resumed.run(3)

    assert [r.l_total for r in first.trace + resumed.trace] == [r.l_total for r in straight.trace]
    assert [r.lr for r in first.trace + resumed.trace] == [r.lr for r in straight.trace]
    for name, tensor in straight.model.params.items():
        np.testing.assert_array_equal(resumed.model.params[name].data, tensor.data)


def test_resume_keeps_run_config():
    trainer = trained_trainer()
    resumed = resume_trainer(trainer_checkpoint(trainer), [dataset()])
    assert resumed.cfg.to_flat_dict() == trainer.cfg.to_flat_dict()
    assert resumed.step == trainer.step
    assert resumed.optimizer.state.t == trainer.optimizer.state.t


def test_resume_applies_schedule_and_loss_overrides():
    trainer = trained_trainer()
    saved = trainer.cfg
    changed = dataclasses.replace(
        saved, loss=dataclasses.replace(saved.loss, lam=0.5), train=dataclasses.replace(saved.train, epochs=6)
    )
    resumed = resume_trainer(trainer_checkpoint(trainer), [dataset()], changed)
    assert resumed.cfg.loss.lam == 0.5
    assert resumed.total_steps == 6 * resumed.steps_per_epoch
    resumed.run(1)
    ckpt = trainer_checkpoint(resumed)
    assert ckpt.run_config().train.epochs == 6
    assert ckpt.run_config().loss.lam == 0.5
    assert ckpt.step == trainer.step + 1


def test_resume_rejects_a_different_architecture():
    trainer = trained_trainer()
    other = dataclasses.replace(trainer.cfg, model=dataclasses.replace(trainer.cfg.model, seed=9))
    with pytest.raises(ContractError, match="model and paradigm"):
        resume_trainer(trainer_checkpoint(trainer), [dataset()], other)
