"""Markdown summaries of run and sweep directories."""

import glob
import os

from .errors import ReportError
from .plots import plot_decay, plot_fields
from .readers import read_rate_report, read_table

_BADGES = {"pass": "PASS", "fail": "FAIL"}


def _badge(verdict):
    return _BADGES.get(verdict, f"({verdict})")


def _fmt(x, digits=4):
    if x is None:
        return "-"
    return f"{x:.{digits}g}"


def _entry_rows(report):
    rows = ["| quantity | fitted rate | r^2 | bound | kind | verdict |",
            "|---|---|---|---|---|---|"]
    for e in report["entries"]:
        fit = e.get("fit")
        rows.append("| {q} | {r} | {r2} | {b} | {k} | {v} |".format(
            q=e["quantity"],
            r=_fmt(fit["rate"] if fit else None),
            r2=_fmt(fit["r_squared"] if fit else None),
            b=_fmt(e.get("bound")) if e.get("bound_kind") == "explicit" else "-",
            k=e.get("bound_kind", "-"),
            v=_badge(e["verdict"])))
    return rows


def _run_figures(run_dir, table, report, lines):
    fig_dir = os.path.join(run_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    window = tuple(report["window"]) if report else None
    plateau = report["lyapunov_plateau"] if report else None
    entries = (report["entries"] if report
               else [{"quantity": c} for c in table.columns
                     if c not in ("t", "clip_events")])
    lines.append("")
    lines.append("## Figures")
    for e in entries:
        q = e["quantity"]
        overlays = {}
        if e.get("bound_kind") == "explicit" and e.get("bound", 0) > 0:
            overlays["bound"] = e["bound"]
        out = os.path.join(fig_dir, f"{q}.png")
        try:
            plot_decay(os.path.join(run_dir, "diagnostics.csv"), (q,),
                       overlays, out, window=window, plateau=plateau)
        except ReportError:
            lines.append(f"- {q}: not plottable from this CSV")
            continue
        lines.append(f"![{q}](figures/{q}.png)")
    for side in sorted(glob.glob(os.path.join(run_dir, "snapshot_*.json"))):
        prefix = side[: -len(".json")]
        tag = os.path.basename(prefix)
        plot_fields(prefix, os.path.join(fig_dir, f"{tag}.png"))
        lines.append(f"![{tag}](figures/{tag}.png)")


def _summarize_run(run_dir, figures):
    table = read_table(os.path.join(run_dir, "diagnostics.csv"))
    lines = [f"# Run summary: {os.path.basename(os.path.abspath(run_dir))}",
             ""]
    if table.data.shape[0] == 0:
        lines.append("No data: the diagnostics file has a header but no "
                     "records.")
        return "\n".join(lines) + "\n"
    t = table.t
    lines.append(f"{table.data.shape[0]} records over t in "
                 f"[{t[0]:g}, {t[-1]:g}].")
    lines.append("")

    report_path = os.path.join(run_dir, "rate_report.json")
    report = None
    if os.path.exists(report_path):
        report = read_rate_report(report_path)
        lo, hi = report["window"]
        lines.append("## Fitted vs predicted rates")
        lines.append(f"Fit window [{lo:g}, {hi:g}], "
                     f"gamma_emp = {report['gamma_emp']:.4g}.")
        lines.append("")
        lines.extend(_entry_rows(report))
    else:
        lines.append("No rate_report.json in this directory; fitted-rate "
                     "table unavailable (run may have been too short to "
                     "fit).")
    if figures:
        _run_figures(run_dir, table, report, lines)
    return "\n".join(lines) + "\n"


def _summarize_sweep(run_dir):
    lines = [f"# Sweep summary: {os.path.basename(os.path.abspath(run_dir))}",
             ""]
    path = os.path.join(run_dir, "sweep_summary.csv")
    try:
        with open(path, "r", encoding="ascii") as fh:
            rows = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ReportError(f"cannot read {path!r}: {exc}") from exc
    if len(rows) < 2:
        lines.append("No data: the sweep summary has no rows.")
        return "\n".join(lines) + "\n"
    header = rows[0].split(",")
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for row in rows[1:]:
        cells = row.split(",")
        cells[-1] = _badge(cells[-1])
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    for sub in sorted(glob.glob(os.path.join(run_dir, "beta_*"))):
        if os.path.isdir(sub):
            lines.append(f"- per-run outputs: `{os.path.basename(sub)}/`")
    return "\n".join(lines) + "\n"


def summarize(run_dir, figures=True):
    """Markdown report for one run directory or one sweep directory.

    Figures are written under run_dir/figures and linked relatively, so
    the document is meant to live inside run_dir."""
    if not os.path.isdir(run_dir):
        raise ReportError(f"{run_dir!r} is not a directory")
    if os.path.exists(os.path.join(run_dir, "sweep_summary.csv")):
        return _summarize_sweep(run_dir)
    return _summarize_run(run_dir, figures)
