"""Per-snapshot monitors and decay-rate estimation.

A DiagnosticsRecord is one row of the run's time series: masses, sup norms,
integral monitors and the two functionals that witness boundedness (the
weighted a log a + b log b + z^2 functional and the relative entropy of a
against 1).  fit_decay turns a positive time series into a log-linear rate;
rate_report assembles the per-quantity comparison against the guaranteed
exponents that the parameter set implies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import DomainError, FitError
from .grid import Grid, gradient_quartic_integral, gradient_sq_integral, quadrature
from .model import Parameters
from .solver import State

# Below this, s log s is treated as the s -> 0 limit 0 rather than risking
# log underflow on subnormals.
_XLOGX_FLOOR = 1e-300


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One sampled row; field order here is the CSV column order."""

    t: float
    mass_u: float
    mass_w: float
    mass_z: float
    sup_u_minus_one: float
    sup_v: float
    sup_w: float
    sup_z: float
    int_sq_u_minus_one: float
    int_a_abs_log_a: float
    int_b_abs_log_b: float
    lyapunov: float
    entropy: float
    int_grad_v_sq: float
    int_grad_v_quartic: float
    min_a: float
    min_u: float
    clip_events: int


RECORD_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


def _xlogx(f: np.ndarray) -> np.ndarray:
    out = np.zeros_like(f)
    m = f > _XLOGX_FLOOR
    fm = f[m]
    out[m] = fm * np.log(fm)
    return out


def lyapunov_F(s: State, p: Parameters, g: Grid) -> float:
    """Weighted entropy-like functional int e^{chi_u v} a log a
    + int e^{chi_w v} b log b + int z^2.  Bounded above along admissible
    runs; its plateau value feeds the deviation monitor in rate_report."""
    fa = np.exp(p.chi_u * s.v) * _xlogx(s.a)
    fb = np.exp(p.chi_w * s.v) * _xlogx(s.b)
    return quadrature(fa, g) + quadrature(fb, g) + quadrature(s.z * s.z, g)


def entropy_u(s: State, p: Parameters, g: Grid) -> float:
    """Relative entropy int e^{chi_u v} (a - 1 - log a).  Nonnegative, zero
    exactly when a is identically 1; +inf when a has a zero cell (the
    integrand diverges there, and reporting inf keeps the monitor honest)."""
    if np.any(s.a <= 0.0):
        return math.inf
    integrand = np.exp(p.chi_u * s.v) * (s.a - 1.0 - np.log(s.a))
    return quadrature(integrand, g)


def llogl_monitors(s: State, g: Grid):
    """int a |log a| and int b |log b| with the s |log s| -> 0 extension."""
    return (quadrature(np.abs(_xlogx(s.a)), g),
            quadrature(np.abs(_xlogx(s.b)), g))


def collect(s: State, p: Parameters, g: Grid) -> DiagnosticsRecord:
    """Aggregate every monitor for one state into a record."""
    u = s.u(p)
    w = s.w(p)
    la, lb = llogl_monitors(s, g)
    return DiagnosticsRecord(
        t=s.t,
        mass_u=quadrature(u, g),
        mass_w=quadrature(w, g),
        mass_z=quadrature(s.z, g),
        sup_u_minus_one=float(np.abs(u - 1.0).max()),
        sup_v=float(s.v.max()),
        sup_w=float(w.max()),
        sup_z=float(s.z.max()),
        int_sq_u_minus_one=quadrature((u - 1.0) ** 2, g),
        int_a_abs_log_a=la,
        int_b_abs_log_b=lb,
        lyapunov=lyapunov_F(s, p, g),
        entropy=entropy_u(s, p, g),
        int_grad_v_sq=gradient_sq_integral(s.v, g),
        int_grad_v_quartic=gradient_quartic_integral(s.v, g),
        min_a=float(s.a.min()),
        min_u=float(u.min()),
        clip_events=s.clip_events,
    )


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential fit y ~ exp(log_intercept - rate t)."""

    quantity: str
    rate: float
    log_intercept: float
    r_squared: float
    t_lo: float
    t_hi: float
    n_samples: int


def fit_decay(series, window, quantity: str = "value") -> DecayFit:
    """Fit log y against t over the closed window [t_lo, t_hi].

    The rate is the negated slope: positive for decaying data.  Raises
    FitError when the window holds fewer than 8 samples or any nonpositive
    value; callers are expected to shrink or censor first.  A constant
    series fits exactly (rate 0, r^2 = 1).
    """
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("series must be a sequence of (t, value) pairs")
    t_lo = float(window[0])
    t_hi = float(window[1])
    if not t_lo < t_hi:
        raise DomainError("window must satisfy t_lo < t_hi")
    m = (arr[:, 0] >= t_lo) & (arr[:, 0] <= t_hi)
    t = arr[m, 0]
    y = arr[m, 1]
    if t.size < 8:
        raise FitError(
            f"{quantity}: {t.size} samples in [{t_lo:g}, {t_hi:g}], need 8")
    if np.any(y <= 0.0):
        raise FitError(f"{quantity}: nonpositive values in fit window")
    ly = np.log(y)
    if np.all(y == y[0]):
        # an exactly constant series would otherwise hit polyfit with a
        # zero-variance response and produce rounding-noise r^2
        return DecayFit(quantity=quantity, rate=0.0,
                        log_intercept=float(ly[0]), r_squared=1.0,
                        t_lo=t_lo, t_hi=t_hi, n_samples=int(t.size))
    slope, intercept = np.polyfit(t, ly, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - float(ly.mean())) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return DecayFit(quantity=quantity, rate=0.0 - float(slope),
                    log_intercept=float(intercept), r_squared=r2,
                    t_lo=t_lo, t_hi=t_hi, n_samples=int(t.size))


@dataclass(frozen=True)
class RateEntry:
    """One quantity's comparison: fitted rate vs guaranteed exponent.

    bound_kind "explicit" compares fitted >= bound (1 - tolerance);
    "positivity" only demands a positive fitted rate.  All checks are
    one-sided: a faster-than-guaranteed decay never fails.
    """

    quantity: str
    bound: float
    bound_kind: str
    verdict: str
    fit: DecayFit | None = None
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RateReport:
    t_lo: float
    t_hi: float
    tolerance: float
    gamma_emp: float
    lyapunov_plateau: float
    entries: tuple

    def entry(self, quantity: str) -> RateEntry:
        for e in self.entries:
            if e.quantity == quantity:
                return e
        raise KeyError(quantity)

    def to_dict(self) -> dict:
        return {
            "window": [self.t_lo, self.t_hi],
            "tolerance": self.tolerance,
            "gamma_emp": self.gamma_emp,
            "lyapunov_plateau": self.lyapunov_plateau,
            "entries": [
                {
                    "quantity": e.quantity,
                    "bound": e.bound,
                    "bound_kind": e.bound_kind,
                    "verdict": e.verdict,
                    "fit": None if e.fit is None else {
                        "rate": e.fit.rate,
                        "log_intercept": e.fit.log_intercept,
                        "r_squared": e.fit.r_squared,
                        "t_lo": e.fit.t_lo,
                        "t_hi": e.fit.t_hi,
                        "n_samples": e.fit.n_samples,
                    },
                    "info": dict(e.info),
                }
                for e in self.entries
            ],
        }


def default_fit_window(t0: float, t_end: float) -> tuple[float, float]:
    """Final half of the run, but never inside the first 10% of it."""
    span = t_end - t0
    if span <= 0.0:
        raise DomainError("run has no temporal extent to fit over")
    return max(t_end - 0.5 * span, t0 + 0.1 * span), t_end


# Censoring kicks in only for series with real dynamic range; a plateaued
# series (max/min within two decades) must be fitted as-is, flatness and all.
_CENSOR_RANGE = 100.0
_CENSOR_FACTOR = 4.0


def _censored(t, y):
    ymin = float(y.min())
    ymax = float(y.max())
    if ymin <= 0.0 or ymax > _CENSOR_RANGE * ymin:
        keep = y > _CENSOR_FACTOR * ymin
        return t[keep], y[keep], int(t.size - keep.sum())
    return t, y, 0


def _aitken_plateau(t, f, t_lo, t_hi):
    """Extrapolated limit of F from three window samples via one Aitken
    delta-squared step; falls back to the last sample when the increments
    do not contract."""
    s = (t_hi - t_lo) / 4.0
    idx = [int(np.searchsorted(t, target, side="right")) - 1
           for target in (t_hi - 2.0 * s, t_hi - s, t_hi)]
    f0, f1, f2 = (float(f[max(i, 0)]) for i in idx)
    d = (f2 - f1) - (f1 - f0)
    if d == 0.0 or not math.isfinite(d):
        return f2
    return f2 - (f2 - f1) ** 2 / d


_POSITIVITY_QUANTITIES = (
    "sup_u_minus_one",
    "sup_w",
    "int_sq_u_minus_one",
    "int_grad_v_sq",
    "int_grad_v_quartic",
    "entropy",
    "lyapunov_deviation",
)


def rate_report(records, p: Parameters, window=None,
                tolerance: float = 0.05) -> RateReport:
    """Fit every monitored decay series over the window and compare against
    the exponents the parameter set guarantees.

    Explicit bounds: min(1-beta, delta_z) for the combined w+z mass, half
    that for sup z, and alpha_u times the window minimum of the cell-density
    minimum (gamma_emp) for sup v.  Everything else only promises decay, so
    those entries demand a positive fitted rate.  Verdicts: "pass", "fail",
    "already at equilibrium" (identically zero in the window), "at
    floating-point floor" (censoring left under 8 samples), "insufficient
    samples".
    """
    recs = list(records)
    if len(recs) < 2:
        raise FitError("rate_report needs a run with at least two records")
    t = np.array([r.t for r in recs])
    if window is None:
        t_lo, t_hi = default_fit_window(float(t[0]), float(t[-1]))
    else:
        t_lo = float(window[0])
        t_hi = float(window[1])
        if not t_lo < t_hi:
            raise DomainError("window must satisfy t_lo < t_hi")
    in_win = (t >= t_lo) & (t <= t_hi)
    if not in_win.any():
        raise FitError(f"no records inside fit window [{t_lo:g}, {t_hi:g}]")

    min_u = np.array([r.min_u for r in recs])
    gamma_emp = float(min_u[in_win].min())
    lyap = np.array([r.lyapunov for r in recs])
    plateau = _aitken_plateau(t, lyap, t_lo, t_hi)

    delta = min(1.0 - p.beta, p.delta_z)
    series = {
        "mass_w_plus_z": np.array([r.mass_w + r.mass_z for r in recs]),
        "sup_z": np.array([r.sup_z for r in recs]),
        "sup_v": np.array([r.sup_v for r in recs]),
        "sup_u_minus_one": np.array([r.sup_u_minus_one for r in recs]),
        "sup_w": np.array([r.sup_w for r in recs]),
        "int_sq_u_minus_one": np.array([r.int_sq_u_minus_one for r in recs]),
        "int_grad_v_sq": np.array([r.int_grad_v_sq for r in recs]),
        "int_grad_v_quartic": np.array([r.int_grad_v_quartic for r in recs]),
        "entropy": np.array([r.entropy for r in recs]),
        "lyapunov_deviation": np.abs(lyap - plateau),
    }
    bounds = {
        "mass_w_plus_z": delta,
        "sup_z": 0.5 * delta,
        "sup_v": p.alpha_u * gamma_emp,
    }
    # Two stages of the decay analysis give different guaranteed exponents
    # for the u-1 monitors; both are surfaced for the record, neither is
    # enforced (the verdict only demands positivity).
    u1_info = {
        "candidate_rate_coarse": min(2.0 * p.mu_u * gamma_emp,
                                     2.0 * gamma_emp, delta),
        "candidate_rate_refined": 0.5 * min(gamma_emp, p.mu_u * gamma_emp,
                                            0.5 * (1.0 - p.beta),
                                            0.5 * p.delta_z),
    }

    entries = []
    for name, y in series.items():
        bound = bounds.get(name, 0.0)
        kind = "explicit" if name in bounds else "positivity"
        info = dict(u1_info) if name == "sup_u_minus_one" else {}
        tw = t[in_win]
        yw = y[in_win]
        if not np.any(yw != 0.0):
            entries.append(RateEntry(name, bound, kind,
                                     "already at equilibrium", None, info))
            continue
        tk, yk, dropped = _censored(tw, yw)
        if dropped:
            info = dict(info, censored_samples=dropped)
        if tk.size < 8:
            verdict = ("at floating-point floor" if dropped
                       else "insufficient samples")
            entries.append(RateEntry(name, bound, kind, verdict, None, info))
            continue
        fit = fit_decay(np.column_stack([tk, yk]), (t_lo, t_hi), name)
        if kind == "positivity":
            ok = fit.rate > 0.0
        else:
            ok = fit.rate >= bound * (1.0 - tolerance)
        entries.append(RateEntry(name, bound, kind,
                                 "pass" if ok else "fail", fit, info))
    return RateReport(t_lo=t_lo, t_hi=t_hi, tolerance=tolerance,
                      gamma_emp=gamma_emp, lyapunov_plateau=plateau,
                      entries=tuple(entries))
