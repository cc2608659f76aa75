"""Tests for the unified Typer CLI (senet command)."""

import csv
import json

import numpy as np
import pytest
import typer
import yaml
from typer.testing import CliRunner

from src.app import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, app, click_exception_types, dispatch
from src.data.image_io import read_pnm, write_ppm
from src.training.checkpoint_manager import load_checkpoint

runner = CliRunner()

TINY = ["--img-size", "16", "--patch", "8", "--seed", "1"]


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthetic data plus one trained checkpoint shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    result = runner.invoke(
        app, ["gen-data", "--seed", "3", "--size", "24", "--train-count", "2", "--test-count", "2", "--out", str(data)]
    )
    assert result.exit_code == 0, result.output
    run = root / "run"
    result = runner.invoke(
        app,
        ["train", *TINY, "--task", "cod", "--epochs", "2", "--manifest", str(data / "manifest.tsv"),
         "--max-steps", "1", "--out", str(run)],
    )
    assert result.exit_code == 0, result.output
    return {"data": data, "run": run, "ckpt": run / "model.senc"}


# -- version & help -----------------------------------------------------------


class TestVersionAndHelp:
    def test_version_flag(self):
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert "senet-desk v" in result.output

    def test_version_short_flag(self):
        result = runner.invoke(app, ["-v"])
        assert result.exit_code == 0
        assert "senet-desk v" in result.output

    def test_help_flag_lists_subcommands(self):
        result = runner.invoke(app, ["--help"])
        assert result.exit_code == 0
        for command in ("gen-data", "train", "eval", "predict", "sweep", "cross-domain", "gradcheck", "report"):
            assert command in result.output


# -- log level ----------------------------------------------------------------


class TestLogLevel:
    @pytest.mark.parametrize("level", ["compact", "verbose", "debug"])
    def test_valid_log_level(self, monkeypatch, level):
        recorded = {}
        monkeypatch.setattr("src.cli_logging.configure_log_level", lambda value: recorded.update(level=value))

        result = runner.invoke(app, ["--log-level", level, "report", "--help"])
        assert result.exit_code == 0
        assert recorded["level"] == level

    def test_invalid_log_level_exits_with_error(self):
        result = runner.invoke(app, ["--log-level", "loud", "report", "--help"])
        assert result.exit_code != 0


# -- exit codes ---------------------------------------------------------------


class TestDispatch:
    def test_version_is_success(self, capsys):
        assert dispatch(["--version"]) == EXIT_OK
        assert "senet-desk v" in capsys.readouterr().out

    def test_bad_choice_is_usage_error(self):
        assert dispatch(["train", "--paradigm", "joint3"]) == EXIT_USAGE

    def test_unknown_command_is_usage_error(self):
        assert dispatch(["fly"]) == EXIT_USAGE

    def test_eval_without_inputs_is_usage_error(self):
        assert dispatch(["eval"]) == EXIT_USAGE

    def test_bad_ratio_list_is_usage_error(self):
        assert dispatch(["sweep", "--ratios", "a,b"]) == EXIT_USAGE

    def test_missing_checkpoint_is_runtime_error(self, tmp_path, capsys):
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("", encoding="utf-8")
        code = dispatch(["eval", "--ckpt", str(tmp_path / "absent.senc"), "--manifest", str(manifest)])
        assert code == EXIT_RUNTIME
        assert "eval failed" in capsys.readouterr().err

    def test_bad_config_is_runtime_error(self, tmp_path):
        config = tmp_path / "config.yml"
        config.write_text("model:\n  enc_dim: 8\n", encoding="utf-8")
        assert dispatch(["gen-data", "--config", str(config), "--out", str(tmp_path)]) == EXIT_RUNTIME

    def test_missing_config_file_is_usage_error(self, tmp_path):
        code = dispatch(["gen-data", "--config", str(tmp_path / "absent.yml"), "--out", str(tmp_path)])
        assert code == EXIT_USAGE
        assert not (tmp_path / "manifest.tsv").exists()

    def test_recognises_the_exceptions_typer_raises(self):
        usage_errors, aborts = click_exception_types()
        assert issubclass(typer.BadParameter, usage_errors)
        assert issubclass(typer.Abort, aborts)


# -- commands -----------------------------------------------------------------


class TestGenData:
    def test_writes_images_masks_and_manifests(self, workspace):
        data = workspace["data"]
        lines = (data / "manifest.tsv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 8
        assert [line.split("\t")[2] for line in lines] == ["cod"] * 4 + ["sod"] * 4
        assert (data / "cod" / "manifest.tsv").exists()
        assert read_pnm(data / "sod" / "masks" / "sod_00003.pgm").shape == (24, 24)
        assert (data / "resolved_config.yml").exists()

    def test_single_task(self, tmp_path):
        result = runner.invoke(app, ["gen-data", "--task", "sod", "--size", "16", "--train-count", "1",
                                     "--test-count", "0", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert not (tmp_path / "cod").exists()
        assert len((tmp_path / "manifest.tsv").read_text(encoding="utf-8").splitlines()) == 1


class TestTrain:
    def test_writes_checkpoint_and_trace(self, workspace):
        run = workspace["run"]
        ckpt = load_checkpoint(workspace["ckpt"])
        assert ckpt.step == 1
        assert ckpt.run_config().model.img_size == 16
        rows = read_rows(run / "loss_trace.csv")
        assert rows[0] == ["step", "lr", "l_recon", "l_seg", "l_total"]
        assert len(rows) == 2
        assert "img_size: 16" in (run / "resolved_config.yml").read_text(encoding="utf-8")

    def test_joint_run_on_synthetic_data(self, tmp_path):
        result = runner.invoke(
            app, ["train", *TINY, "--paradigm", "joint2", "--samples", "2", "--epochs", "1", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        rows = read_rows(tmp_path / "loss_trace.csv")
        assert rows[0][-2:] == ["cod_loss", "sod_loss"]
        names = load_checkpoint(tmp_path / "model.senc").tensors
        assert any(name.startswith("decoder_sod.") for name in names)

    def test_resume_continues_from_checkpoint(self, workspace, tmp_path):
        ckpt = tmp_path / "resumed.senc"
        result = runner.invoke(
            app,
            ["train", "--resume", str(workspace["ckpt"]), "--manifest", str(workspace["data"] / "manifest.tsv"),
             "--max-steps", "1", "--ckpt", str(ckpt), "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert load_checkpoint(ckpt).step == 2

    def test_resume_honours_overrides_and_snapshot_matches(self, workspace, tmp_path):
        ckpt = tmp_path / "resumed.senc"
        result = runner.invoke(
            app,
            ["train", "--resume", str(workspace["ckpt"]), "--manifest", str(workspace["data"] / "manifest.tsv"),
             "--epochs", "6", "--lambda", "0.5", "--max-steps", "1", "--ckpt", str(ckpt), "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        saved = load_checkpoint(ckpt).run_config()
        assert saved.train.epochs == 6
        assert saved.loss.lam == 0.5
        snapshot = yaml.safe_load((tmp_path / "resolved_config.yml").read_text(encoding="utf-8"))
        assert snapshot["epochs"] == 6
        assert snapshot["lambda"] == 0.5

    def test_resume_with_other_geometry_is_runtime_error(self, workspace, tmp_path):
        code = dispatch(
            ["train", "--resume", str(workspace["ckpt"]), "--manifest", str(workspace["data"] / "manifest.tsv"),
             "--img-size", "24", "--out", str(tmp_path)]
        )
        assert code == EXIT_RUNTIME


class TestEval:
    def test_writes_metrics_and_report(self, workspace, tmp_path):
        result = runner.invoke(
            app,
            ["eval", "--ckpt", str(workspace["ckpt"]), "--manifest", str(workspace["data"] / "manifest.tsv"),
             "--curves", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        rows = read_rows(tmp_path / "metrics.csv")
        assert [r[0] for r in rows[1:]] == ["cod_00002", "cod_00003", "MEAN"]
        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report[0]["dataset"] == "manifest"
        assert len(read_rows(tmp_path / "curves" / "cod_00002.csv")) == 257

    def test_report_re_emits_from_metrics_json(self, workspace, tmp_path):
        runner.invoke(
            app,
            ["eval", "--ckpt", str(workspace["ckpt"]), "--manifest", str(workspace["data"] / "manifest.tsv"),
             "--out", str(tmp_path / "eval")],
        )
        result = runner.invoke(app, ["report", "--in", str(tmp_path / "eval" / "metrics.json"),
                                     "--out", str(tmp_path / "again")])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "again" / "report.csv").read_text(encoding="utf-8") == (
            tmp_path / "eval" / "report.csv"
        ).read_text(encoding="utf-8")


class TestPredict:
    def test_writes_quantised_map_at_input_size(self, workspace, tmp_path):
        image = write_ppm(tmp_path / "in.ppm", (np.arange(20 * 24 * 3) % 256).astype(np.uint8).reshape(20, 24, 3))
        result = runner.invoke(
            app, ["predict", "--ckpt", str(workspace["ckpt"]), "--in", str(image), "--out", str(tmp_path / "p.pgm")]
        )
        assert result.exit_code == 0, result.output
        pred = read_pnm(tmp_path / "p.pgm")
        assert pred.shape == (20, 24)
        assert pred.dtype == np.uint8

    def test_missing_image_is_runtime_error(self, workspace, tmp_path):
        result = runner.invoke(
            app, ["predict", "--ckpt", str(workspace["ckpt"]), "--in", str(tmp_path / "none.ppm"),
                  "--out", str(tmp_path / "p.pgm")]
        )
        assert result.exit_code == EXIT_RUNTIME


class TestSweep:
    def test_writes_one_row_per_ratio(self, tmp_path):
        result = runner.invoke(
            app,
            ["sweep", *TINY, "--ratios", "0,0.5", "--epochs", "1", "--train-count", "2", "--test-count", "1",
             "--max-steps", "1", "--out", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        rows = read_rows(tmp_path / "sweep.csv")
        assert [float(r[0]) for r in rows[1:]] == [0.0, 0.5]


class TestGradcheck:
    def test_all_checks_pass(self, tmp_path):
        result = runner.invoke(app, ["gradcheck", "--seed", "0", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "gradient checks passed" in result.output
        rows = read_rows(tmp_path / "gradcheck.csv")
        assert rows[0] == ["name", "error", "threshold", "passed"]
        assert all(r[-1] == "1" for r in rows[1:])
