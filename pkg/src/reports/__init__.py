"""CSV/JSON emission for reports, traces, sweeps and curves."""

from .report_writer import (
    CURVE_COLUMNS,
    REPORT_COLUMNS,
    emit_report,
    load_reports,
    write_cross_domain_csv,
    write_curves_csv,
    write_image_metrics,
    write_loss_trace,
    write_report_json,
    write_sweep_csv,
)

__all__ = [
    "CURVE_COLUMNS",
    "REPORT_COLUMNS",
    "emit_report",
    "load_reports",
    "write_cross_domain_csv",
    "write_curves_csv",
    "write_image_metrics",
    "write_loss_trace",
    "write_report_json",
    "write_sweep_csv",
]
