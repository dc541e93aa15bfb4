"""Post-hoc figures and summaries for haptoviro simulation outputs.

Reads the documented diagnostics CSV, snapshot and rate-report formats;
never imports the solver."""

from .errors import ReportError
from .plots import PlotSpec, plot_decay, plot_fields
from .readers import Snapshot, Table, read_rate_report, read_snapshot_fields, read_table
from .summary import summarize

__all__ = [
    "PlotSpec",
    "ReportError",
    "Snapshot",
    "Table",
    "plot_decay",
    "plot_fields",
    "read_rate_report",
    "read_snapshot_fields",
    "read_table",
    "summarize",
]
