"""Unified Typer CLI for senet-desk.

Provides the ``senet`` command with subcommands for data generation,
training, evaluation, prediction export, sweeps, gradient checks and
report emission. ``dispatch`` maps outcomes onto exit codes: 0 success,
1 usage error, 2 runtime error.
"""

import dataclasses
import enum
import importlib
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import typer
import yaml

from src import __version__, cli_logging
from src.cli_logging import LogLevel
from src.config.config_loader import load_config, merge_overrides, save_config
from src.config.config_models import RunConfig
from src.errors import SenetError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
RESOLVED_CONFIG = "resolved_config.yml"
DEFAULT_CHECKPOINT = "model.senc"
# Typer releases either depend on click or vendor it; usage errors may come from either.
CLICK_EXCEPTION_MODULES = ("click.exceptions", "typer._click.exceptions")


class Task(str, enum.Enum):
    cod = "cod"
    sod = "sod"


class Paradigm(str, enum.Enum):
    single = "single"
    joint1 = "joint1"
    joint2 = "joint2"


def _version_callback(value: bool) -> None:
    if value:
        print(f"senet-desk v{__version__}")
        raise typer.Exit()


app = typer.Typer(
    name="senet",
    help="senet-desk - masked transformer segmentation for camouflaged and salient objects.",
    add_completion=False,
    no_args_is_help=True,
)


@app.callback()
def _app_callback(
    version: bool = typer.Option(
        False,
        "--version",
        "-v",
        callback=_version_callback,
        is_eager=True,
        help="Show version and exit.",
    ),
    log_level: LogLevel = typer.Option(
        LogLevel.compact,
        "--log-level",
        help="Logging verbosity.",
    ),
) -> None:
    """senet-desk - masked transformer segmentation for camouflaged and salient objects."""
    cli_logging.configure_log_level(log_level.value)


@contextmanager
def _runtime_errors(action: str):
    """Report library and IO failures and exit with the runtime code."""
    try:
        yield
    except (SenetError, OSError, yaml.YAMLError) as e:
        cli_logging.error(f"{action} failed: {e}")
        raise typer.Exit(code=EXIT_RUNTIME) from None


def _enum_value(value: Optional[enum.Enum]) -> Optional[str]:
    return value.value if value is not None else None


def _resolve(config: Optional[Path], base: Optional[RunConfig] = None, **overrides: Any) -> RunConfig:
    """File (or ``base``) values, then command-line values on top."""
    cfg = base if base is not None else load_config(config)
    return merge_overrides(cfg, overrides)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.paths.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _snapshot(cfg: RunConfig, out_dir: Path) -> Path:
    path = save_config(cfg, out_dir / RESOLVED_CONFIG)
    cli_logging.verbose(f"Resolved configuration written to {path}")
    return path


def _parse_ratios(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


def _train_split(cfg: RunConfig, task: str, count: int, manifest: Optional[Path]):
    from src.data.dataset import load_dataset, synthetic_dataset

    if manifest is not None:
        return load_dataset(manifest, split="train", task=task)
    synth = dataclasses.replace(cfg.synth, mode=task, camo_similarity=None)
    return synthetic_dataset(synth, count)


def _test_split(cfg: RunConfig, task: str, count: int, start: int, manifest: Optional[Path]):
    from src.data.dataset import load_dataset, synthetic_dataset

    if manifest is not None:
        return load_dataset(manifest, split="test", task=task)
    synth = dataclasses.replace(cfg.synth, mode=task, camo_similarity=None)
    return synthetic_dataset(synth, count, start=start)


@app.command(name="gen-data")
def gen_data(
    config: Optional[Path] = typer.Option(
        None, "--config", exists=True, dir_okay=False, help="Flat YAML run configuration."
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Generator seed."),
    task: Optional[Task] = typer.Option(None, "--task", help="Generate one task only (default both)."),
    size: Optional[int] = typer.Option(None, "--size", help="Synthetic image size in pixels."),
    train_count: int = typer.Option(8, "--train-count", min=0, help="Training samples per task."),
    test_count: int = typer.Option(4, "--test-count", min=0, help="Test samples per task."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
) -> None:
    """Write synthetic COD/SOD images, masks and manifests."""
    from src.data.dataset import write_synthetic_dataset
    from src.data.manifest_parser import load_manifest, write_manifest

    with _runtime_errors("gen-data"):
        cfg = _resolve(config, seed=seed, synth_size=size, out=out)
        out_dir = _out_dir(cfg)
        tasks = [task.value] if task is not None else ["cod", "sod"]
        records = []
        for name in tasks:
            synth = dataclasses.replace(cfg.synth, mode=name, camo_similarity=None)
            manifest = write_synthetic_dataset(out_dir / name, synth, train_count, test_count)
            records.extend(load_manifest(manifest))
        combined = write_manifest(out_dir / "manifest.tsv", records)
        _snapshot(cfg, out_dir)
        cli_logging.success(f"Wrote {len(records)} samples; manifest {combined}")


@app.command()
def train(
    config: Optional[Path] = typer.Option(
        None, "--config", exists=True, dir_okay=False, help="Flat YAML run configuration."
    ),
    seed: Optional[int] = typer.Option(None, "--seed"),
    img_size: Optional[int] = typer.Option(None, "--img-size"),
    patch: Optional[int] = typer.Option(None, "--patch"),
    mask_ratio: Optional[float] = typer.Option(None, "--mask-ratio"),
    lam: Optional[float] = typer.Option(None, "--lambda", help="Reconstruction weight in the total loss."),
    paradigm: Optional[Paradigm] = typer.Option(None, "--paradigm"),
    task: Optional[Task] = typer.Option(None, "--task", help="Task of a single-task run."),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    manifest: Optional[Path] = typer.Option(None, "--manifest", help="Training manifest (synthetic data if omitted)."),
    sod_manifest: Optional[Path] = typer.Option(None, "--sod-manifest", help="Separate SOD manifest for joint runs."),
    samples: int = typer.Option(8, "--samples", min=1, help="Synthetic samples per task without a manifest."),
    max_steps: Optional[int] = typer.Option(None, "--max-steps", min=1, help="Stop after this many steps."),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Checkpoint to continue from."),
    ckpt: Optional[Path] = typer.Option(None, "--ckpt", help="Where to save the checkpoint."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
) -> None:
    """Train a single-task or joint model and save a checkpoint plus loss trace."""
    from src.model.senet import SenetModel
    from src.reports.report_writer import write_loss_trace
    from src.training.checkpoint_manager import load_checkpoint, save_checkpoint
    from src.training.joint import decoders_for_paradigm
    from src.training.trainer import Trainer, resume_trainer, trainer_checkpoint

    with _runtime_errors("train"):
        base = load_checkpoint(resume).run_config() if resume is not None else None
        cfg = _resolve(
            config,
            base,
            seed=seed,
            img_size=img_size,
            patch=patch,
            mask_ratio=mask_ratio,
            **{"lambda": lam},
            paradigm=_enum_value(paradigm),
            task=_enum_value(task),
            epochs=epochs,
            manifest=manifest,
            sod_manifest=sod_manifest,
            ckpt=ckpt,
            out=out,
        )
        out_dir = _out_dir(cfg)
        if cfg.train.paradigm == "single":
            datasets = [_train_split(cfg, cfg.task, samples, cfg.paths.manifest)]
        else:
            datasets = [
                _train_split(cfg, "cod", samples, cfg.paths.manifest),
                _train_split(cfg, "sod", samples, cfg.paths.sod_manifest or cfg.paths.manifest),
            ]

        if resume is not None:
            trainer = resume_trainer(load_checkpoint(resume), datasets, cfg)
            cli_logging.info(f"Resuming at step {trainer.step} of {trainer.total_steps}")
        else:
            model = SenetModel(cfg.model, decoders_for_paradigm(cfg.train.paradigm))
            trainer = Trainer(model, cfg, datasets)
        cli_logging.verbose(
            f"{cfg.train.paradigm} training: {trainer.total_steps} steps, "
            f"{trainer.model.params.num_scalars()} parameters"
        )
        trainer.run(max_steps)

        ckpt_path = Path(cfg.paths.ckpt) if cfg.paths.ckpt else out_dir / DEFAULT_CHECKPOINT
        save_checkpoint(ckpt_path, trainer_checkpoint(trainer))
        write_loss_trace(trainer.trace, out_dir / "loss_trace.csv")
        _snapshot(cfg, out_dir)
        last = trainer.trace[-1].l_total if trainer.trace else float("nan")
        cli_logging.success(f"Trained to step {trainer.step}; final loss {last:.4f}; checkpoint {ckpt_path}")


@app.command(name="eval")
def eval_command(
    ckpt: Optional[Path] = typer.Option(None, "--ckpt", help="Checkpoint to evaluate."),
    manifest: Optional[Path] = typer.Option(None, "--manifest", help="Manifest holding the test split."),
    task: Optional[Task] = typer.Option(None, "--task", help="Task tag: selects decoder and F-measure."),
    split: str = typer.Option("test", "--split", help="Manifest split to evaluate ('all' for every record)."),
    curves: bool = typer.Option(False, "--curves", help="Also dump per-threshold curves per image."),
    config: Optional[Path] = typer.Option(
        None, "--config", exists=True, dir_okay=False, help="Flat YAML run configuration."
    ),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
) -> None:
    """Evaluate a checkpoint and write metrics.csv, report.csv and report.json."""
    from src.data.dataset import load_dataset
    from src.metrics.measures import threshold_curves
    from src.reports.report_writer import emit_report, write_curves_csv, write_image_metrics, write_report_json
    from src.training.checkpoint_manager import load_checkpoint, restore_model
    from src.training.evaluation import evaluate, predict_map

    with _runtime_errors("eval"):
        file_cfg = load_config(config) if config is not None else None
        ckpt_path = ckpt or (file_cfg.paths.ckpt if file_cfg else None)
        manifest_path = manifest or (file_cfg.paths.manifest if file_cfg else None)
        if ckpt_path is None or manifest_path is None:
            raise typer.BadParameter("eval needs --ckpt and --manifest")
        checkpoint = load_checkpoint(ckpt_path)
        cfg = _resolve(
            None,
            checkpoint.run_config(),
            task=_enum_value(task),
            ckpt=ckpt_path,
            manifest=manifest_path,
            out=out or (file_cfg.paths.out if file_cfg else None),
        )
        out_dir = _out_dir(cfg)
        model = restore_model(checkpoint)
        dataset = load_dataset(manifest_path, split=None if split == "all" else split, task=cfg.task)
        report = evaluate(model, dataset, cfg.task)

        write_image_metrics(report, out_dir / "metrics.csv")
        write_report_json([report], out_dir / "metrics.json")
        emit_report([report], out_dir / "report.csv")
        if curves:
            for sample in dataset:
                pred = predict_map(model, sample.image, cfg.task)
                write_curves_csv(threshold_curves(pred, sample.mask), out_dir / "curves" / f"{sample.name}.csv")
        _snapshot(cfg, out_dir)
        cli_logging.success(
            f"{report.dataset} ({cfg.task}): S {report.s_alpha:.3f} E {report.e_phi:.3f} "
            f"F {report.f_beta:.3f} M {report.mae:.3f} Score {report.score:.3f}"
        )


@app.command()
def predict(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint to run."),
    image: Path = typer.Option(..., "--in", help="Input PPM/PGM/PNG image."),
    out: Path = typer.Option(..., "--out", help="Output PGM map."),
    task: Optional[Task] = typer.Option(None, "--task", help="Task tag selecting the decoder."),
) -> None:
    """Write an 8-bit prediction map, round(255·p), at the input's resolution."""
    from src.data.image_io import load_rgb, save_map
    from src.training.checkpoint_manager import load_checkpoint, restore_model
    from src.training.evaluation import predict_map

    with _runtime_errors("predict"):
        checkpoint = load_checkpoint(ckpt)
        cfg = _resolve(None, checkpoint.run_config(), task=_enum_value(task), ckpt=ckpt, out=out.parent)
        model = restore_model(checkpoint)
        pred = predict_map(model, load_rgb(image), cfg.task)
        written = save_map(out, pred)
        _snapshot(cfg, written.parent)
        cli_logging.success(f"Prediction written to {written}")


@app.command()
def sweep(
    config: Optional[Path] = typer.Option(
        None, "--config", exists=True, dir_okay=False, help="Flat YAML run configuration."
    ),
    seed: Optional[int] = typer.Option(None, "--seed"),
    img_size: Optional[int] = typer.Option(None, "--img-size"),
    patch: Optional[int] = typer.Option(None, "--patch"),
    lam: Optional[float] = typer.Option(None, "--lambda"),
    task: Optional[Task] = typer.Option(None, "--task"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    ratios: str = typer.Option("0,0.05,0.25,0.5,0.75,0.9", "--ratios", help="Comma-separated training mask ratios."),
    manifest: Optional[Path] = typer.Option(None, "--manifest", help="Manifest with train/test splits."),
    train_count: int = typer.Option(8, "--train-count", min=1),
    test_count: int = typer.Option(4, "--test-count", min=1),
    max_steps: Optional[int] = typer.Option(None, "--max-steps", min=1),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
) -> None:
    """Train one model per masking ratio and write sweep.csv (ratio against Score)."""
    from src.reports.report_writer import write_sweep_csv
    from src.training.sweep import mask_ratio_sweep

    values = _parse_ratios(ratios)
    with _runtime_errors("sweep"):
        cfg = _resolve(
            config,
            seed=seed,
            img_size=img_size,
            patch=patch,
            **{"lambda": lam},
            task=_enum_value(task),
            epochs=epochs,
            manifest=manifest,
            out=out,
        )
        out_dir = _out_dir(cfg)
        train_ds = _train_split(cfg, cfg.task, train_count, cfg.paths.manifest)
        test_ds = _test_split(cfg, cfg.task, test_count, train_count, cfg.paths.manifest)
        rows = mask_ratio_sweep(cfg, values, train_ds, test_ds, max_steps)
        path = write_sweep_csv(rows, out_dir / "sweep.csv")
        _snapshot(cfg, out_dir)
        cli_logging.success(f"Sweep over {len(rows)} ratios written to {path}")


@app.command(name="cross-domain")
def cross_domain(
    config: Optional[Path] = typer.Option(
        None, "--config", exists=True, dir_okay=False, help="Flat YAML run configuration."
    ),
    seed: Optional[int] = typer.Option(None, "--seed"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    train_count: int = typer.Option(8, "--train-count", min=1),
    test_count: int = typer.Option(4, "--test-count", min=1),
    max_steps: Optional[int] = typer.Option(None, "--max-steps", min=1),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
) -> None:
    """Train COD-only, SOD-only and both joint settings; test each on both tasks."""
    from src.reports.report_writer import write_cross_domain_csv
    from src.training.evaluation import cross_domain_table
    from src.training.sweep import train_cross_domain_models

    with _runtime_errors("cross-domain"):
        cfg = _resolve(config, seed=seed, epochs=epochs, out=out)
        out_dir = _out_dir(cfg)
        models = train_cross_domain_models(
            cfg,
            _train_split(cfg, "cod", train_count, None),
            _train_split(cfg, "sod", train_count, None),
            max_steps,
        )
        test_sets = {
            task: (_test_split(cfg, task, test_count, train_count, None), task) for task in ("cod", "sod")
        }
        cells = cross_domain_table(models, test_sets)
        path = write_cross_domain_csv(cells, out_dir / "cross_domain.csv")
        _snapshot(cfg, out_dir)
        cli_logging.success(f"Cross-domain table written to {path}")


@app.command()
def gradcheck(
    seed: int = typer.Option(0, "--seed", help="Seed for the random check points."),
    out: Optional[Path] = typer.Option(None, "--out", help="Also write gradcheck.csv here."),
) -> None:
    """Check every gradient against central differences in float64."""
    from src.training.gradcheck_suite import run_gradcheck_suite

    with _runtime_errors("gradcheck"):
        results = run_gradcheck_suite(seed)
        width = max(len(r.name) for r in results)
        for r in results:
            status = "ok" if r.passed else "FAIL"
            cli_logging.info(f"{r.name:<{width}}  {r.error:.3e}  < {r.threshold:.0e}  {status}")
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            lines = ["name,error,threshold,passed"] + [
                f"{r.name},{r.error!r},{r.threshold!r},{int(r.passed)}" for r in results
            ]
            (out / "gradcheck.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
            _snapshot(_resolve(None, seed=seed, out=out), out)
        failed = [r.name for r in results if not r.passed]
        if failed:
            cli_logging.error(f"{len(failed)} gradient check(s) failed: {', '.join(failed)}")
            raise typer.Exit(code=EXIT_RUNTIME)
        cli_logging.success(f"All {len(results)} gradient checks passed")


@app.command()
def report(
    source: Path = typer.Option(..., "--in", help="metrics.json written by eval."),
    out: Path = typer.Option(..., "--out", help="Output directory."),
) -> None:
    """Re-emit report.csv and report.json from saved metrics."""
    from src.reports.report_writer import emit_report, load_reports

    with _runtime_errors("report"):
        reports = load_reports(source)
        csv_path, json_path = emit_report(reports, out / "report.csv")
        cli_logging.success(f"Wrote {csv_path} and {json_path}")


def click_exception_types() -> Tuple[Tuple[Type[Exception], ...], Tuple[Type[Exception], ...]]:
    """(usage error bases, abort classes) from every click implementation present."""
    usage: List[Type[Exception]] = []
    aborts: List[Type[Exception]] = []
    for name in CLICK_EXCEPTION_MODULES:
        try:
            module = importlib.import_module(name)
        except ImportError:
            continue
        usage.append(module.ClickException)
        aborts.append(module.Abort)
    return tuple(usage), tuple(aborts)


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    args = list(sys.argv[1:] if argv is None else argv)
    usage_errors, aborts = click_exception_types()
    try:
        result = app(args=args, prog_name="senet", standalone_mode=False)
    except usage_errors as e:
        e.show()
        return EXIT_USAGE
    except aborts:
        cli_logging.error("Aborted")
        return EXIT_USAGE
    except (SenetError, OSError) as e:
        cli_logging.error(str(e))
        return EXIT_RUNTIME
    return result if isinstance(result, int) else EXIT_OK


def main() -> None:
    """Entry point for the ``senet`` command."""
    sys.exit(dispatch())
