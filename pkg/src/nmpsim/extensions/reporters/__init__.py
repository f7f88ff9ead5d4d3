from .report import (
    ReportFormat,
    emit_report,
    energy_frame,
    per_cube_frame,
    summary_text,
    timeline_frame,
)

__all__ = [
    "ReportFormat",
    "emit_report",
    "energy_frame",
    "per_cube_frame",
    "summary_text",
    "timeline_frame",
]
