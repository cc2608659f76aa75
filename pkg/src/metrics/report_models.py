"""Per-image metric records and the dataset-level report."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

import numpy as np

from src.config.config_models import TASKS
from src.errors import ContractError, DegenerateTargetError
from src.metrics.measures import (
    e_measure_mean,
    f_measure_max,
    f_measure_weighted,
    mae_metric,
    s_measure,
    score,
)

METRIC_FIELDS = ("s_alpha", "e_phi", "f_beta_w", "f_beta_m", "mae")


@dataclass
class ImageMetrics:
    """All five measures for one prediction/ground-truth pair.

    ``degenerate`` marks an all-background ground truth; both F-measures are
    undefined there and reported as 0.
    """

    name: str
    s_alpha: float
    e_phi: float
    f_beta_w: float
    f_beta_m: float
    mae: float
    degenerate: bool = False

    def f_beta(self, task: str) -> float:
        return self.f_beta_w if task == "cod" else self.f_beta_m

    def score(self, task: str) -> float:
        return score(self.s_alpha, self.e_phi, self.f_beta(task), self.mae)


def measure_image(name: str, pred: np.ndarray, gt: np.ndarray) -> ImageMetrics:
    degenerate = False
    try:
        f_w = f_measure_weighted(pred, gt)
        f_m = f_measure_max(pred, gt)
    except DegenerateTargetError:
        degenerate = True
        f_w = f_m = 0.0
    return ImageMetrics(
        name=name,
        s_alpha=s_measure(pred, gt),
        e_phi=e_measure_mean(pred, gt),
        f_beta_w=f_w,
        f_beta_m=f_m,
        mae=mae_metric(pred, gt),
        degenerate=degenerate,
    )


@dataclass
class MetricsReport:
    """Metrics for one prediction set; dataset values are means in sample order.

    The composite score uses the weighted F-measure for ``cod`` reports and
    the maximum F-measure for ``sod`` reports.
    """

    dataset: str
    task: str
    images: List[ImageMetrics] = field(default_factory=list)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ContractError(f"task must be one of {TASKS}, got {self.task}")

    def _mean(self, name: str) -> float:
        if not self.images:
            raise ContractError(f"report {self.dataset} holds no images")
        return float(np.mean([getattr(m, name) for m in self.images]))

    @property
    def s_alpha(self) -> float:
        return self._mean("s_alpha")

    @property
    def e_phi(self) -> float:
        return self._mean("e_phi")

    @property
    def f_beta_w(self) -> float:
        return self._mean("f_beta_w")

    @property
    def f_beta_m(self) -> float:
        return self._mean("f_beta_m")

    @property
    def mae(self) -> float:
        return self._mean("mae")

    @property
    def f_beta(self) -> float:
        return self.f_beta_w if self.task == "cod" else self.f_beta_m

    @property
    def score(self) -> float:
        return score(self.s_alpha, self.e_phi, self.f_beta, self.mae)

    @property
    def degenerate_images(self) -> List[str]:
        return [m.name for m in self.images if m.degenerate]

    def summary(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "task": self.task,
            "s_alpha": self.s_alpha,
            "e_phi": self.e_phi,
            "f_beta": self.f_beta,
            "mae": self.mae,
            "score": self.score,
        }

    def to_dict(self) -> Dict[str, Any]:
        result = self.summary()
        result["f_beta_w"] = self.f_beta_w
        result["f_beta_m"] = self.f_beta_m
        result["degenerate"] = self.degenerate_images
        result["images"] = [asdict(m) for m in self.images]
        return result

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricsReport":
        """Rebuild from ``to_dict`` output; dataset means are recomputed from images."""
        try:
            images = [ImageMetrics(**item) for item in data["images"]]
            return cls(dataset=data["dataset"], task=data["task"], images=images)
        except (KeyError, TypeError) as e:
            raise ContractError(f"not a metrics report: {e}") from None
