"""COD/SOD evaluation measures and reports."""

from src.metrics.measures import (
    THRESHOLDS,
    binary_iou,
    e_curve,
    e_measure_mean,
    f_curve,
    f_measure_max,
    f_measure_weighted,
    mae_metric,
    precision_recall,
    s_measure,
    score,
    threshold_curves,
)
from src.metrics.report_models import ImageMetrics, MetricsReport, measure_image

__all__ = [
    "THRESHOLDS",
    "ImageMetrics",
    "MetricsReport",
    "binary_iou",
    "e_curve",
    "e_measure_mean",
    "f_curve",
    "f_measure_max",
    "f_measure_weighted",
    "mae_metric",
    "measure_image",
    "precision_recall",
    "s_measure",
    "score",
    "threshold_curves",
]
