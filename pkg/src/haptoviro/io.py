"""Deterministic on-disk formats: diagnostics CSV, raw float64 field
snapshots with a JSON sidecar, and the serialized rate report.

CSV numbers are written with repr(), the shortest decimal string that
round-trips to the same double, so re-reading a file reproduces every value
bit-exactly and repeated identical runs produce byte-identical files.
Snapshots store each field as little-endian float64, row-major with x
fastest, which makes write -> read the identity on State.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .diagnostics import RECORD_COLUMNS, DiagnosticsRecord, RateReport
from .errors import FileFormatError
from .grid import Grid
from .model import Parameters
from .solver import State

SNAPSHOT_FIELDS = ("a", "b", "v", "z")
_SIDECAR_KEYS = ("t", "nx", "ny", "Lx", "Ly", "step_count", "clip_events",
                 "parameter_hash", "chi_u", "chi_w", "fields", "dtype")
_DTYPE_TAG = "<f8"


def parameter_hash(p: Parameters) -> str:
    """Stable digest of the parameter set, recorded in snapshot sidecars so
    a reload can be checked against the parameters it will be stepped with."""
    text = ",".join(f"{name}={getattr(p, name)!r}" for name in (
        "D_u", "D_w", "D_z", "xi_u", "xi_w", "mu_u", "rho",
        "alpha_u", "alpha_w", "delta_z", "beta"))
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def write_diagnostics(records, path: str) -> None:
    """One CSV row per record in the documented column order; an empty
    series still writes the header."""
    lines = [",".join(RECORD_COLUMNS)]
    for rec in records:
        lines.append(",".join(repr(getattr(rec, col))
                              for col in RECORD_COLUMNS))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_diagnostics(path: str):
    """Inverse of write_diagnostics; returns a list of DiagnosticsRecord."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln]
    except OSError as exc:
        raise FileFormatError(f"cannot read diagnostics {path!r}: {exc}") from exc
    if not lines:
        raise FileFormatError(f"{path!r} is empty, expected a CSV header")
    header = tuple(lines[0].split(","))
    if header != RECORD_COLUMNS:
        raise FileFormatError(
            f"{path!r} header {header} does not match the diagnostics "
            f"schema {RECORD_COLUMNS}")
    records = []
    for n, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(RECORD_COLUMNS):
            raise FileFormatError(
                f"{path!r} line {n}: {len(cells)} columns, "
                f"expected {len(RECORD_COLUMNS)}")
        try:
            values = {col: float(cell)
                      for col, cell in zip(RECORD_COLUMNS, cells)}
        except ValueError as exc:
            raise FileFormatError(f"{path!r} line {n}: {exc}") from exc
        values["clip_events"] = int(values["clip_events"])
        records.append(DiagnosticsRecord(**values))
    return records


def write_snapshot(s: State, prefix: str, p: Parameters, g: Grid) -> None:
    """Write prefix.<field>.bin for each field plus the prefix.json sidecar."""
    arrays = {"a": s.a, "b": s.b, "v": s.v, "z": s.z}
    for name in SNAPSHOT_FIELDS:
        arr = np.ascontiguousarray(arrays[name], dtype=np.dtype(_DTYPE_TAG))
        with open(f"{prefix}.{name}.bin", "wb") as fh:
            fh.write(arr.tobytes())
    sidecar = {
        "t": s.t,
        "nx": g.nx,
        "ny": g.ny,
        "Lx": g.Lx,
        "Ly": g.Ly,
        "step_count": s.step_count,
        "clip_events": s.clip_events,
        "parameter_hash": parameter_hash(p),
        # the stored a and b are the exp(-chi v)-weighted densities, so a
        # consumer needs both weights to decode them without a parameter file
        "chi_u": p.chi_u,
        "chi_w": p.chi_w,
        "fields": list(SNAPSHOT_FIELDS),
        "dtype": _DTYPE_TAG,
    }
    with open(f"{prefix}.json", "w", encoding="ascii") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_sidecar(prefix: str) -> dict:
    path = f"{prefix}.json"
    try:
        with open(path, "r", encoding="ascii") as fh:
            sidecar = json.load(fh)
    except OSError as exc:
        raise FileFormatError(f"cannot read sidecar {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"malformed sidecar {path!r}: {exc}") from exc
    for key in _SIDECAR_KEYS:
        if key not in sidecar:
            raise FileFormatError(f"sidecar {path!r} is missing key {key!r}")
    if sidecar["dtype"] != _DTYPE_TAG:
        raise FileFormatError(
            f"sidecar {path!r}: dtype {sidecar['dtype']!r} is not {_DTYPE_TAG!r}")
    if list(sidecar["fields"]) != list(SNAPSHOT_FIELDS):
        raise FileFormatError(
            f"sidecar {path!r}: field order {sidecar['fields']!r} is not "
            f"{list(SNAPSHOT_FIELDS)!r}")
    return sidecar


def snapshot_grid(prefix: str) -> Grid:
    """Grid recorded in a snapshot's sidecar."""
    side = _load_sidecar(prefix)
    return Grid(nx=int(side["nx"]), ny=int(side["ny"]),
                Lx=float(side["Lx"]), Ly=float(side["Ly"]))


def read_snapshot(prefix: str) -> State:
    """Exact inverse of write_snapshot."""
    side = _load_sidecar(prefix)
    ny, nx = int(side["ny"]), int(side["nx"])
    fields = {}
    for name in SNAPSHOT_FIELDS:
        path = f"{prefix}.{name}.bin"
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise FileFormatError(f"cannot read field {path!r}: {exc}") from exc
        arr = np.frombuffer(raw, dtype=np.dtype(_DTYPE_TAG))
        if arr.size != nx * ny:
            raise FileFormatError(
                f"{path!r} holds {arr.size} values, sidecar says {nx * ny}")
        fields[name] = arr.reshape(ny, nx).copy()
    return State(a=fields["a"], b=fields["b"], v=fields["v"], z=fields["z"],
                 t=float(side["t"]), step_count=int(side["step_count"]),
                 clip_events=int(side["clip_events"]))


def write_rate_report(report: RateReport, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
