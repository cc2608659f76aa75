"""Dataset assembly from manifests or from the synthetic generator."""

from pathlib import Path
from typing import List, Optional, Union

from src import cli_logging as log
from src.config.config_models import SynthConfig
from src.data.data_models import Sample, SampleRecord, SegmentationDataset
from src.data.image_io import load_mask, load_rgb, save_map, save_rgb
from src.data.manifest_parser import load_manifest, write_manifest
from src.data.synth import generate_sample
from src.errors import DimensionError


def load_dataset(
    manifest: Union[str, Path],
    split: Optional[str] = None,
    task: Optional[str] = None,
) -> SegmentationDataset:
    """Decode every record of ``manifest`` (optionally filtered) in file order.

    Raises:
        ManifestParseError: on manifest problems.
        ImageFormatError: if a referenced file does not decode.
        DimensionError: if a mask's extents differ from its image's.
    """
    records = load_manifest(manifest)
    samples: List[Sample] = []
    for record in records:
        if split is not None and record.split != split:
            continue
        if task is not None and record.task != task:
            continue
        samples.append(_decode(record))
    log.verbose(f"Loaded {len(samples)} samples from {manifest}")
    return SegmentationDataset(samples=samples, name=Path(manifest).stem)


def _decode(record: SampleRecord) -> Sample:
    image = load_rgb(record.image_path)
    mask = load_mask(record.mask_path)
    if mask.shape != image.shape[1:]:
        raise DimensionError(
            f"{record.mask_path}: mask extents {mask.shape} differ from image {image.shape[1:]}"
        )
    return Sample(name=record.image_path.stem, image=image, mask=mask, task=record.task)


def synthetic_dataset(cfg: SynthConfig, count: int, start: int = 0) -> SegmentationDataset:
    """In-memory synthetic samples ``start .. start+count-1``."""
    samples = []
    for index in range(start, start + count):
        image, mask = generate_sample(cfg, index)
        samples.append(Sample(name=f"{cfg.mode}_{index:05d}", image=image, mask=mask, task=cfg.mode))
    return SegmentationDataset(samples=samples, name=f"synth_{cfg.mode}")


def write_synthetic_dataset(
    out_dir: Union[str, Path],
    cfg: SynthConfig,
    train_count: int,
    test_count: int,
) -> Path:
    """Write PPM images, PGM masks and ``manifest.tsv`` under ``out_dir``.

    Training samples take indices ``0 .. train_count-1`` and test samples
    follow them, so the two splits never share a sample.

    Returns:
        Path of the written manifest.
    """
    out_dir = Path(out_dir)
    records: List[SampleRecord] = []
    for index in range(train_count + test_count):
        split = "train" if index < train_count else "test"
        image, mask = generate_sample(cfg, index)
        stem = f"{cfg.mode}_{index:05d}"
        image_path = save_rgb(out_dir / "images" / f"{stem}.ppm", image)
        mask_path = save_map(out_dir / "masks" / f"{stem}.pgm", mask)
        records.append(SampleRecord(image_path, mask_path, cfg.mode, split))
    manifest = write_manifest(out_dir / "manifest.tsv", records)
    log.verbose(f"Wrote {len(records)} {cfg.mode} samples to {out_dir}")
    return manifest
