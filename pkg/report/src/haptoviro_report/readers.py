"""Readers for the solver's documented output formats.

Everything here is a pure format consumer: the diagnostics CSV (one header
row, then float rows), snapshot .bin/.json pairs, and rate_report JSON.
The solver package is never imported; figures must stay honest even when
only the files survive.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ReportError

SNAPSHOT_FIELDS = ("a", "b", "v", "z")

# monitored series that are sums or offsets of CSV columns rather than
# columns themselves; lyapunov_deviation also needs the plateau value
# recorded in the rate_report
DERIVED_SERIES = ("mass_w_plus_z", "lyapunov_deviation")


@dataclass(frozen=True)
class Table:
    columns: tuple
    data: np.ndarray

    @property
    def t(self):
        return self.data[:, self.columns.index("t")]

    def column(self, name):
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise ReportError(
                f"no column {name!r}; file has {', '.join(self.columns)}"
            ) from None

    def series(self, name, plateau=None):
        """Resolve a monitored quantity to a 1-D array.

        Accepts any CSV column plus the documented derived monitors."""
        if name == "mass_w_plus_z":
            return self.column("mass_w") + self.column("mass_z")
        if name == "lyapunov_deviation":
            if plateau is None:
                raise ReportError(
                    "lyapunov_deviation needs the plateau value from a "
                    "rate_report")
            return np.abs(self.column("lyapunov") - float(plateau))
        return self.column(name)


def read_table(path):
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln]
    except OSError as exc:
        raise ReportError(f"cannot read {path!r}: {exc}") from exc
    if not lines:
        raise ReportError(f"{path!r} is empty, expected a CSV header")
    columns = tuple(lines[0].split(","))
    if "t" not in columns:
        raise ReportError(f"{path!r} has no 't' column")
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(columns):
            raise ReportError(f"{path!r} line {n}: {len(cells)} cells, "
                              f"header has {len(columns)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ReportError(f"{path!r} line {n}: {exc}") from exc
    data = (np.array(rows) if rows
            else np.empty((0, len(columns))))
    return Table(columns=columns, data=data)


def _sidecar(prefix):
    path = f"{prefix}.json"
    try:
        with open(path, "r", encoding="ascii") as fh:
            side = json.load(fh)
    except OSError as exc:
        raise ReportError(f"cannot read sidecar {path!r}: {exc}") from exc
    except ValueError as exc:
        raise ReportError(f"malformed sidecar {path!r}: {exc}") from exc
    for key in ("t", "nx", "ny", "Lx", "Ly", "chi_u", "chi_w",
                "fields", "dtype"):
        if key not in side:
            raise ReportError(f"sidecar {path!r} is missing key {key!r}")
    if side["dtype"] != "<f8":
        raise ReportError(f"sidecar {path!r}: unsupported dtype "
                          f"{side['dtype']!r}")
    if list(side["fields"]) != list(SNAPSHOT_FIELDS):
        raise ReportError(f"sidecar {path!r}: unexpected field order "
                          f"{side['fields']!r}")
    return side


@dataclass(frozen=True)
class Snapshot:
    t: float
    Lx: float
    Ly: float
    fields: dict  # u, v, w, z in physical densities


def read_snapshot_fields(prefix):
    """Load a snapshot and decode the weighted a, b into densities
    u = a e^{chi_u v}, w = b e^{chi_w v} using the sidecar weights."""
    side = _sidecar(prefix)
    nx, ny = int(side["nx"]), int(side["ny"])
    raw = {}
    for name in SNAPSHOT_FIELDS:
        path = f"{prefix}.{name}.bin"
        try:
            with open(path, "rb") as fh:
                arr = np.frombuffer(fh.read(), dtype=np.dtype("<f8"))
        except OSError as exc:
            raise ReportError(f"cannot read field {path!r}: {exc}") from exc
        if arr.size != nx * ny:
            raise ReportError(f"{path!r} holds {arr.size} values, "
                              f"sidecar says {nx * ny}")
        raw[name] = arr.reshape(ny, nx)
    v = raw["v"]
    fields = {
        "u": raw["a"] * np.exp(float(side["chi_u"]) * v),
        "v": v,
        "w": raw["b"] * np.exp(float(side["chi_w"]) * v),
        "z": raw["z"],
    }
    return Snapshot(t=float(side["t"]), Lx=float(side["Lx"]),
                    Ly=float(side["Ly"]), fields=fields)


def read_rate_report(path):
    try:
        with open(path, "r", encoding="ascii") as fh:
            report = json.load(fh)
    except OSError as exc:
        raise ReportError(f"cannot read rate report {path!r}: {exc}") from exc
    except ValueError as exc:
        raise ReportError(f"malformed rate report {path!r}: {exc}") from exc
    for key in ("entries", "window", "gamma_emp", "lyapunov_plateau"):
        if key not in report:
            raise ReportError(f"rate report {path!r} is missing {key!r}")
    if len(report["window"]) != 2:
        raise ReportError(f"rate report {path!r} has a malformed window")
    for entry in report["entries"]:
        if "quantity" not in entry or "verdict" not in entry:
            raise ReportError(f"rate report {path!r} has a malformed entry")
    return report


def check_finite_rates(overlays):
    for name, rate in overlays.items():
        if not math.isfinite(float(rate)):
            raise ReportError(f"overlay {name!r} has non-finite rate {rate!r}")
