"""Data models for segmentation samples and datasets."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional

import numpy as np

from src.errors import ContractError, DimensionError

SPLITS = ("train", "test")


@dataclass(frozen=True)
class SampleRecord:
    """One manifest line: where a sample lives and what it is for."""

    image_path: Path
    mask_path: Path
    task: str
    split: str


@dataclass
class Sample:
    """A decoded image/mask pair at its native resolution."""

    name: str
    image: np.ndarray  # float64 [3, H, W] in [0, 1]
    mask: np.ndarray  # float64 [H, W] in {0, 1}
    task: str

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[0] != 3:
            raise DimensionError(f"{self.name}: image must be [3, H, W], got {self.image.shape}")
        if self.mask.shape != self.image.shape[1:]:
            raise DimensionError(
                f"{self.name}: mask extents {self.mask.shape} differ from image {self.image.shape[1:]}"
            )


@dataclass
class SegmentationDataset:
    """Ordered collection of samples; order is the manifest/generation order."""

    samples: List[Sample] = field(default_factory=list)
    name: str = "dataset"

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def __getitem__(self, index: int) -> Sample:
        return self.samples[index]

    @property
    def task(self) -> Optional[str]:
        """The single task shared by every sample, or None when empty."""
        tasks = {s.task for s in self.samples}
        if len(tasks) > 1:
            raise ContractError(f"{self.name}: samples mix tasks {sorted(tasks)}")
        return tasks.pop() if tasks else None
