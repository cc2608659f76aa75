"""Sample generation, image IO, resizing and manifests."""

from src.data.data_models import Sample, SampleRecord, SegmentationDataset
from src.data.dataset import load_dataset, synthetic_dataset, write_synthetic_dataset
from src.data.image_io import load_mask, load_rgb, read_pnm, save_map, save_rgb, write_pgm, write_ppm
from src.data.manifest_parser import ManifestParser, load_manifest, write_manifest
from src.data.synth import generate_sample
from src.data.transforms import augment_hflip, resize, resize_bilinear, resize_nearest

__all__ = [
    "ManifestParser",
    "Sample",
    "SampleRecord",
    "SegmentationDataset",
    "augment_hflip",
    "generate_sample",
    "load_dataset",
    "load_manifest",
    "load_mask",
    "load_rgb",
    "read_pnm",
    "resize",
    "resize_bilinear",
    "resize_nearest",
    "save_map",
    "save_rgb",
    "synthetic_dataset",
    "write_manifest",
    "write_pgm",
    "write_ppm",
    "write_synthetic_dataset",
]
