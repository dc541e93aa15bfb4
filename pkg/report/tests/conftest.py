"""Real solver outputs for the smoke tests, produced through the public
CLI only (this package must work from files alone)."""

import json
import pathlib
import subprocess

import numpy as np
import pytest

RUN_INI = """\
[grid]
nx = 32
ny = 32
[solver]
t_end = 20
[output]
snapshot_times = 0, 10, end
"""


def _cli(*argv):
    proc = subprocess.run(["haptoviro", *argv],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr + proc.stdout
    return proc


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("canonical")
    cfg = base / "run.ini"
    cfg.write_text(RUN_INI)
    out = base / "out"
    _cli("run", str(cfg), "--out", str(out))
    return out


@pytest.fixture(scope="session")
def sweep_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("sweep")
    cfg = base / "run.ini"
    cfg.write_text("")
    out = base / "out"
    _cli("sweep", str(cfg), "--out", str(out), "--grid", "16",
         "--t-end", "4")
    return out


def write_snapshot_files(prefix, fields, t=0.0, chi_u=10.0, chi_w=10.0,
                         Lx=1.0, Ly=1.0):
    """Emit a snapshot family in the documented format without the solver."""
    ny, nx = fields["a"].shape
    for name in ("a", "b", "v", "z"):
        arr = np.ascontiguousarray(fields[name], dtype="<f8")
        pathlib.Path(f"{prefix}.{name}.bin").write_bytes(arr.tobytes())
    sidecar = {
        "t": t, "nx": nx, "ny": ny, "Lx": Lx, "Ly": Ly,
        "step_count": 0, "clip_events": 0, "parameter_hash": "0" * 64,
        "chi_u": chi_u, "chi_w": chi_w,
        "fields": ["a", "b", "v", "z"], "dtype": "<f8",
    }
    pathlib.Path(f"{prefix}.json").write_text(json.dumps(sidecar))
    return prefix
