"""Semilog decay figures and snapshot heatmap panels."""

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ReportError
from .readers import check_finite_rates, read_snapshot_fields, read_table


def default_window(t0, t_end):
    # same convention the solver uses for its fits: final half of the run,
    # clear of the first 10%
    span = t_end - t0
    return max(t_end - 0.5 * span, t0 + 0.1 * span), t_end


def _loglinear_rate(t, y, t_lo, t_hi):
    """Negated slope of log y on [t_lo, t_hi], positive samples only.
    Returns None when fewer than two usable samples remain."""
    m = (t >= t_lo) & (t <= t_hi) & (y > 0.0)
    if m.sum() < 2:
        return None
    slope = np.polyfit(t[m], np.log(y[m]), 1)[0]
    return -float(slope)


def plot_decay(csv_path, quantities, overlays, out_path, *,
               window=None, logy=True, plateau=None):
    """Render the requested diagnostics series with dashed reference lines
    of slope -rate per overlay, annotating each series with its fitted
    rate.  Returns {quantity: fitted rate or None}.

    All inputs are validated before the output file is touched."""
    check_finite_rates(overlays)
    table = read_table(csv_path)
    if table.data.shape[0] == 0:
        raise ReportError(f"{csv_path!r} has no data rows, nothing to plot")
    if not quantities:
        raise ReportError("no quantities requested")
    t = table.t
    series = {q: np.asarray(table.series(q, plateau=plateau), dtype=float)
              for q in quantities}
    t_lo, t_hi = window if window is not None \
        else default_window(float(t[0]), float(t[-1]))

    fits = {q: _loglinear_rate(t, y, t_lo, t_hi)
            for q, y in series.items()}

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for q, y in series.items():
        shown = np.where(y > 0.0, y, np.nan) if logy else y
        label = (f"{q} (fitted {fits[q]:.4g})" if fits[q] is not None
                 else f"{q} (no fit)")
        ax.plot(t, shown, label=label)

    anchor_q = quantities[0]
    ya = series[anchor_q]
    in_win = (t >= t_lo) & (t <= t_hi) & (ya > 0.0)
    if overlays and in_win.any():
        ta0 = float(t[in_win][0])
        ya0 = float(ya[in_win][0])
        tt = np.linspace(ta0, float(t[-1]), 64)
        for name, rate in overlays.items():
            ax.plot(tt, ya0 * np.exp(-float(rate) * (tt - ta0)),
                    linestyle="--", linewidth=1.0,
                    label=f"{name}: rate {float(rate):g}")
    if logy:
        ax.set_yscale("log")
    ax.axvspan(t_lo, t_hi, color="0.92", zorder=0)
    ax.set_xlabel("t")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return fits


def plot_fields(snapshot_path, out_path):
    """2x2 heatmaps of u, v, w, z from one snapshot, per-field color
    scales, shared time annotation."""
    snap = read_snapshot_fields(snapshot_path)
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 6.5))
    for ax, name in zip(axes.flat, ("u", "v", "w", "z")):
        arr = snap.fields[name]
        im = ax.imshow(arr, origin="lower",
                       extent=(0.0, snap.Lx, 0.0, snap.Ly))
        ax.set_title(name)
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.suptitle(f"t = {snap.t:g}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


@dataclass(frozen=True)
class PlotSpec:
    """One decay-figure job: where to read, what to draw, where to write."""

    csv_path: str
    quantities: tuple
    out_path: str
    overlays: dict = field(default_factory=dict)
    logy: bool = True
    window: tuple = None

    def __post_init__(self):
        check_finite_rates(self.overlays)
        if not self.quantities:
            raise ReportError("PlotSpec needs at least one quantity")

    def render(self, plateau=None):
        return plot_decay(self.csv_path, tuple(self.quantities),
                          dict(self.overlays), self.out_path,
                          window=self.window, logy=self.logy,
                          plateau=plateau)
