"""Test-time evaluation and the cross-domain table."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from src import cli_logging as log
from src.data.data_models import Sample, SegmentationDataset
from src.data.transforms import resize_bilinear
from src.errors import ContractError
from src.metrics.report_models import ImageMetrics, MetricsReport, measure_image
from src.model.patches import MaskPlan
from src.model.senet import SenetModel

THREADS_ENV = "SENET_THREADS"


def thread_count() -> int:
    """Worker count from ``SENET_THREADS`` (default 1, minimum 1)."""
    raw = os.getenv(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning(f"ignoring {THREADS_ENV}={raw!r}; expected an integer")
        return 1


def predict_map(model: SenetModel, image: np.ndarray, task: Optional[str] = None) -> np.ndarray:
    """Prediction at the image's own resolution (model runs at ``img_size``)."""
    size = model.config.img_size
    height, width = image.shape[1:]
    pred = model.forward_inference(resize_bilinear(image, size, size), task)
    if (height, width) == (size, size):
        return pred.astype(np.float64)
    return resize_bilinear(pred, height, width)


def _evaluate_one(model: SenetModel, sample: Sample, task: str) -> Tuple[ImageMetrics, np.ndarray]:
    pred = predict_map(model, sample.image, task)
    return measure_image(sample.name, pred, sample.mask), pred


def evaluate(
    model: SenetModel,
    dataset: SegmentationDataset,
    task: str,
    threads: Optional[int] = None,
) -> MetricsReport:
    """Metrics of ``model`` on ``dataset`` at ground-truth resolution.

    ``task`` selects the decoder and the F-measure used in the score; it
    need not match the task the model was trained on. Nothing is masked:
    every encode is checked to have seen all tokens.

    Raises:
        ContractError: on an empty dataset or if an encode saw fewer tokens.
    """
    if len(dataset) == 0:
        raise ContractError("cannot evaluate on an empty dataset")
    expected = model.config.num_patches

    def check_unmasked(count: int, plan: MaskPlan) -> None:
        if count != expected or plan.masked.size:
            raise ContractError(f"evaluation encoded {count} of {expected} tokens")

    workers = threads if threads is not None else thread_count()
    model.add_encode_listener(check_unmasked)
    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda s: _evaluate_one(model, s, task), dataset.samples))
        else:
            results = [_evaluate_one(model, s, task) for s in dataset.samples]
    finally:
        model.remove_encode_listener(check_unmasked)

    for metrics, _ in results:
        log.debug(
            f"{metrics.name}: S {metrics.s_alpha:.4f} E {metrics.e_phi:.4f} "
            f"F {metrics.f_beta(task):.4f} M {metrics.mae:.4f}"
        )
    report = MetricsReport(dataset=dataset.name, task=task, images=[m for m, _ in results])
    if report.degenerate_images:
        log.warning(
            f"{dataset.name}: {len(report.degenerate_images)} image(s) have empty ground truth; "
            "their F-measures are reported as 0"
        )
    return report


@dataclass
class CrossDomainCell:
    trained_on: str
    tested_on: str
    report: MetricsReport


def cross_domain_table(
    models: Mapping[str, SenetModel],
    test_sets: Mapping[str, Tuple[SegmentationDataset, str]],
    threads: Optional[int] = None,
) -> List[CrossDomainCell]:
    """Evaluate every trained model on every test set.

    Args:
        models: training-domain label to model, e.g. ``{"cod": m1, "sod": m2}``.
        test_sets: test-set label to (dataset, task tag used for routing and scoring).

    Returns:
        Cells in ``models`` order, then ``test_sets`` order.
    """
    cells = []
    for trained_on, model in models.items():
        for tested_on, (dataset, task) in test_sets.items():
            report = evaluate(model, dataset, task, threads)
            cells.append(CrossDomainCell(trained_on, tested_on, report))
            log.verbose(f"{trained_on} -> {tested_on}: score {report.score:.3f}")
    return cells


def cross_domain_matrix(cells: List[CrossDomainCell]) -> Dict[str, Dict[str, float]]:
    matrix: Dict[str, Dict[str, float]] = {}
    for cell in cells:
        matrix.setdefault(cell.trained_on, {})[cell.tested_on] = cell.report.score
    return matrix
