"""CSV and JSON emission for metrics, loss traces, sweeps and curves."""

import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from src.errors import ContractError
from src.metrics.report_models import METRIC_FIELDS, MetricsReport

REPORT_COLUMNS = ("dataset", "s_alpha", "e_phi", "f_beta", "mae", "score")
IMAGE_COLUMNS = ("name",) + METRIC_FIELDS + ("score", "degenerate")
TRACE_COLUMNS = ("step", "lr", "l_recon", "l_seg", "l_total")
JOINT_TRACE_COLUMNS = TRACE_COLUMNS + ("cod_loss", "sod_loss")
SWEEP_COLUMNS = ("ratio", "s_alpha", "e_phi", "f_beta", "mae", "score")
CURVE_COLUMNS = ("threshold", "precision", "recall", "f_measure", "e_measure")
CROSS_DOMAIN_COLUMNS = ("trained_on", "tested_on") + REPORT_COLUMNS[1:]


def _write_atomic(path: Path, text: str) -> Path:
    """Write through a sibling temp file so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_suffix(path.suffix + ".tmp")
    temp_file.write_text(text, encoding="utf-8")
    temp_file.replace(path)
    return path


def _csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def _cell(value: Any) -> Any:
    # repr keeps every float bit so CSV and JSON parse to the same value.
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return value


def report_row(report: MetricsReport) -> Dict[str, Any]:
    summary = report.summary()
    return {key: summary[key] for key in REPORT_COLUMNS}


def emit_report(reports: Sequence[MetricsReport], path: Path) -> Tuple[Path, Path]:
    """Write the dataset table as CSV plus a JSON mirror beside it.

    Returns:
        (csv path, json path); the JSON file swaps the suffix for ``.json``.

    Raises:
        ContractError: if ``reports`` is empty.
        OSError: if the location is not writable.
    """
    if not reports:
        raise ContractError("emit_report needs at least one report")
    rows = [report_row(r) for r in reports]
    csv_path = _write_atomic(Path(path), _csv_text(REPORT_COLUMNS, ([row[c] for c in REPORT_COLUMNS] for row in rows)))
    json_path = _write_atomic(Path(path).with_suffix(".json"), json.dumps(rows, indent=2) + "\n")
    return csv_path, json_path


def write_image_metrics(report: MetricsReport, path: Path) -> Path:
    """One row per image in dataset order, then a ``MEAN`` row."""
    rows: List[List[Any]] = []
    for m in report.images:
        rows.append([m.name] + [getattr(m, f) for f in METRIC_FIELDS] + [m.score(report.task), int(m.degenerate)])
    mean = ["MEAN"] + [getattr(report, f) for f in METRIC_FIELDS] + [report.score, len(report.degenerate_images)]
    rows.append(mean)
    return _write_atomic(path, _csv_text(IMAGE_COLUMNS, rows))


def write_report_json(reports: Sequence[MetricsReport], path: Path) -> Path:
    """Full reports, per-image values included; ``load_reports`` reads them back."""
    return _write_atomic(path, json.dumps([r.to_dict() for r in reports], indent=2) + "\n")


def load_reports(path: Path) -> List[MetricsReport]:
    """Read reports written by ``write_report_json`` (a single object is accepted too)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise ContractError(f"{path}: expected a list of metrics reports")
    return [MetricsReport.from_dict(item) for item in data]


def write_loss_trace(trace: Sequence[Any], path: Path) -> Path:
    """Loss trace CSV; joint runs add ``cod_loss`` and ``sod_loss`` columns."""
    joint = any(r.cod_loss is not None for r in trace)
    columns = JOINT_TRACE_COLUMNS if joint else TRACE_COLUMNS
    rows = ([getattr(r, c) for c in columns] for r in trace)
    return _write_atomic(path, _csv_text(columns, rows))


def write_sweep_csv(rows: Sequence[Any], path: Path) -> Path:
    """Masking ratio against the dataset metrics and score."""
    body = ([row.ratio] + [report_row(row.report)[c] for c in SWEEP_COLUMNS[1:]] for row in rows)
    return _write_atomic(path, _csv_text(SWEEP_COLUMNS, body))


def write_cross_domain_csv(cells: Sequence[Any], path: Path) -> Path:
    body = (
        [cell.trained_on, cell.tested_on] + [report_row(cell.report)[c] for c in REPORT_COLUMNS[1:]]
        for cell in cells
    )
    return _write_atomic(path, _csv_text(CROSS_DOMAIN_COLUMNS, body))


def write_curves_csv(curves: Mapping[str, np.ndarray], path: Path) -> Path:
    """Per-threshold precision, recall, F and E values (256 rows)."""
    columns = [np.asarray(curves[c]) for c in CURVE_COLUMNS]
    return _write_atomic(path, _csv_text(CURVE_COLUMNS, zip(*(c.tolist() for c in columns))))
