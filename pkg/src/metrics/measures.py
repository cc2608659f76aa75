"""Binary foreground-map measures: MAE, F-measures, S-measure, E-measure.

All functions take a prediction in [0, 1] and a ground truth that is
binarised at 0.5, both ``[H, W]``.
"""

from typing import Dict, Tuple

import numpy as np
from scipy import ndimage

from src.errors import DegenerateTargetError, DimensionError

EPS = float(np.spacing(1))
THRESHOLDS = np.arange(256, dtype=np.float64) / 255.0
BETA2_MAX = 0.3
BETA2_WEIGHTED = 1.0
S_ALPHA = 0.5
GAUSS_SIZE = 7
GAUSS_SIGMA = 5.0
DECAY = 5.0


def _prepare(pred, gt) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise DimensionError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    if pred.ndim != 2 or pred.size == 0:
        raise DimensionError(f"maps must be non-empty 2D arrays, got {pred.shape}")
    return pred, gt > 0.5


def mae_metric(pred, gt) -> float:
    pred, gt = _prepare(pred, gt)
    return float(np.mean(np.abs(pred - gt)))


def _positive_counts(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per threshold: (#fg pixels with pred ≥ t, #bg pixels with pred ≥ t)."""
    fg = np.sort(pred[gt])
    bg = np.sort(pred[~gt])
    tp = fg.size - np.searchsorted(fg, THRESHOLDS, side="left")
    fp = bg.size - np.searchsorted(bg, THRESHOLDS, side="left")
    return tp.astype(np.float64), fp.astype(np.float64)


def precision_recall(pred, gt) -> Tuple[np.ndarray, np.ndarray]:
    """Precision and recall at the 256 thresholds ``t/255``.

    Raises:
        DegenerateTargetError: if the ground truth has no foreground.
    """
    pred, gt = _prepare(pred, gt)
    n_fg = int(gt.sum())
    if n_fg == 0:
        raise DegenerateTargetError("ground truth is empty; precision/recall undefined")
    tp, fp = _positive_counts(pred, gt)
    predicted = tp + fp
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = tp / n_fg
    return precision, recall


def f_curve(pred, gt, beta2: float = BETA2_MAX) -> np.ndarray:
    precision, recall = precision_recall(pred, gt)
    denom = beta2 * precision + recall
    return np.divide(
        (1.0 + beta2) * precision * recall, denom, out=np.zeros_like(denom), where=denom > 0
    )


def f_measure_max(pred, gt) -> float:
    """Maximum F-measure (β² = 0.3) over the 256 thresholds."""
    return float(f_curve(pred, gt).max())


def _gaussian_kernel(size: int = GAUSS_SIZE, sigma: float = GAUSS_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    y, x = np.ogrid[-half : half + 1, -half : half + 1]
    kernel = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    kernel[kernel < np.finfo(kernel.dtype).eps * kernel.max()] = 0
    return kernel / kernel.sum()


def f_measure_weighted(pred, gt) -> float:
    """Weighted F-measure (β² = 1) with pixel dependency and importance terms.

    Raises:
        DegenerateTargetError: if the ground truth has no foreground.
    """
    pred, gt = _prepare(pred, gt)
    if not gt.any():
        raise DegenerateTargetError("ground truth is empty; weighted F-measure undefined")
    dist, (rows, cols) = ndimage.distance_transform_edt(~gt, return_indices=True)

    error = np.abs(pred - gt)
    # Background errors take the error at their nearest foreground pixel.
    spread = error[rows, cols]
    spread[gt] = error[gt]
    smoothed = ndimage.convolve(spread, _gaussian_kernel(), mode="constant", cval=0.0)
    dependent = np.where(gt & (smoothed < error), smoothed, error)

    importance = np.where(gt, 1.0, 2.0 - np.exp(np.log(0.5) / DECAY * dist))
    weighted = dependent * importance

    tp = gt.sum() - weighted[gt].sum()
    fp = weighted[~gt].sum()
    recall = 1.0 - weighted[gt].mean()
    precision = tp / (tp + fp + EPS)
    score = (1.0 + BETA2_WEIGHTED) * recall * precision / (recall + BETA2_WEIGHTED * precision + EPS)
    return float(np.clip(score, 0.0, 1.0))


# -- S-measure ----------------------------------------------------------------


def _object_similarity(values: np.ndarray, region: np.ndarray) -> float:
    inside = values[region]
    mean = inside.mean()
    return float(2.0 * mean / (mean * mean + 1.0 + inside.std() + EPS))


def _s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    fg = np.where(gt, pred, 0.0)
    bg = np.where(gt, 0.0, 1.0 - pred)
    u = gt.mean()
    return u * _object_similarity(fg, gt) + (1.0 - u) * _object_similarity(bg, ~gt)


def _centroid(gt: np.ndarray) -> Tuple[int, int]:
    """Split point (x, y) as a count of leading columns/rows."""
    rows, cols = np.nonzero(gt)
    x = int(np.floor(cols.mean() + 0.5)) + 1
    y = int(np.floor(rows.mean() + 0.5)) + 1
    return x, y


def _ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    if n == 0:
        return 0.0
    x = pred.mean()
    y = gt.mean()
    sigma_x = ((pred - x) ** 2).sum() / (n - 1 + EPS)
    sigma_y = ((gt - y) ** 2).sum() / (n - 1 + EPS)
    sigma_xy = ((pred - x) * (gt - y)).sum() / (n - 1 + EPS)
    alpha = 4.0 * x * y * sigma_xy
    beta = (x * x + y * y) * (sigma_x + sigma_y)
    if alpha != 0:
        return float(alpha / (beta + EPS))
    if beta == 0:
        return 1.0
    return 0.0


def _s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    height, width = gt.shape
    x, y = _centroid(gt)
    area = height * width
    gt = gt.astype(np.float64)
    w1 = x * y / area
    w2 = (width - x) * y / area
    w3 = x * (height - y) / area
    w4 = 1.0 - w1 - w2 - w3
    quadrants = (
        (slice(0, y), slice(0, x)),
        (slice(0, y), slice(x, width)),
        (slice(y, height), slice(0, x)),
        (slice(y, height), slice(x, width)),
    )
    scores = [_ssim(pred[q], gt[q]) for q in quadrants]
    return w1 * scores[0] + w2 * scores[1] + w3 * scores[2] + w4 * scores[3]


def s_measure(pred, gt) -> float:
    """Structure measure ``0.5·S_object + 0.5·S_region``, clamped at 0."""
    pred, gt = _prepare(pred, gt)
    mu = gt.mean()
    if mu == 0:
        return float(1.0 - pred.mean())
    if mu == 1:
        return float(pred.mean())
    score = S_ALPHA * _s_object(pred, gt) + (1.0 - S_ALPHA) * _s_region(pred, gt)
    return float(max(score, 0.0))


# -- E-measure ----------------------------------------------------------------


def e_curve(pred, gt) -> np.ndarray:
    """Enhanced-alignment score at each of the 256 thresholds.

    A binarised map and a binary ground truth take two values each, so the
    enhanced map has at most four distinct values; each is weighted by its
    pixel count.
    """
    pred, gt = _prepare(pred, gt)
    n = float(gt.size)
    n_fg = float(gt.sum())
    tp, fp = _positive_counts(pred, gt)
    positives = tp + fp
    if n_fg == 0:
        return (n - positives) / n
    if n_fg == n:
        return positives / n

    mean_p = positives / n
    mean_g = n_fg / n
    parts = (
        (tp, 1.0 - mean_p, 1.0 - mean_g),
        (fp, 1.0 - mean_p, -mean_g),
        (n_fg - tp, -mean_p, 1.0 - mean_g),
        ((n - n_fg) - fp, -mean_p, -mean_g),
    )
    total = np.zeros_like(tp)
    for count, phi_p, phi_g in parts:
        align = 2.0 * phi_p * phi_g / (phi_p * phi_p + phi_g * phi_g)
        total += count * (align + 1.0) ** 2 / 4.0
    return total / n


def e_measure_mean(pred, gt) -> float:
    return float(e_curve(pred, gt).mean())


def score(s: float, e: float, f: float, m: float) -> float:
    """Composite segmentation score ``s + e + f + (1 − m)``."""
    return s + e + f + (1.0 - m)


def binary_iou(pred, gt, threshold: float = 0.5) -> float:
    """IoU of ``pred ≥ threshold`` against the ground truth (1 when both are empty)."""
    pred, gt = _prepare(pred, gt)
    hit = pred >= threshold
    union = np.count_nonzero(hit | gt)
    if union == 0:
        return 1.0
    return float(np.count_nonzero(hit & gt) / union)


def threshold_curves(pred, gt) -> Dict[str, np.ndarray]:
    """Raw per-threshold precision, recall, F (β² = 0.3) and E values."""
    precision, recall = precision_recall(pred, gt)
    denom = BETA2_MAX * precision + recall
    f = np.divide((1.0 + BETA2_MAX) * precision * recall, denom, out=np.zeros_like(denom), where=denom > 0)
    return {
        "threshold": THRESHOLDS.copy(),
        "precision": precision,
        "recall": recall,
        "f_measure": f,
        "e_measure": e_curve(pred, gt),
    }
