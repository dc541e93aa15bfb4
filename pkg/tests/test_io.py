"""CSV, snapshot and hash round-trips, plus malformed-input diagnostics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haptoviro.diagnostics import RECORD_COLUMNS, DiagnosticsRecord
from haptoviro.errors import FileFormatError
from haptoviro.grid import Grid
from haptoviro.io import (parameter_hash, read_diagnostics, read_snapshot,
                          snapshot_grid, write_diagnostics, write_snapshot)
from haptoviro.model import Parameters
from haptoviro.solver import State

finite = st.floats(allow_nan=False, allow_infinity=False)
record_st = st.builds(
    DiagnosticsRecord,
    **{name: finite for name in RECORD_COLUMNS if name != "clip_events"},
    clip_events=st.integers(0, 10 ** 9))


@given(recs=st.lists(record_st, max_size=6))
@settings(max_examples=40, deadline=None)
def test_diagnostics_roundtrip_is_exact(recs, tmp_path_factory):
    path = str(tmp_path_factory.mktemp("csv") / "d.csv")
    write_diagnostics(recs, path)
    assert read_diagnostics(path) == recs


def test_diagnostics_empty_file_vs_empty_table(tmp_path):
    path = str(tmp_path / "d.csv")
    write_diagnostics([], path)
    with open(path) as fh:
        assert fh.read() == ",".join(RECORD_COLUMNS) + "\n"
    assert read_diagnostics(path) == []
    open(path, "w").close()
    with pytest.raises(FileFormatError, match="empty"):
        read_diagnostics(path)


def test_diagnostics_malformed_inputs(tmp_path):
    path = str(tmp_path / "d.csv")
    with open(path, "w") as fh:
        fh.write("t,mass\n")
    with pytest.raises(FileFormatError, match="schema"):
        read_diagnostics(path)
    header = ",".join(RECORD_COLUMNS)
    with open(path, "w") as fh:
        fh.write(header + "\n1.0,2.0\n")
    with pytest.raises(FileFormatError, match="line 2"):
        read_diagnostics(path)
    row = ",".join(["1.0"] * (len(RECORD_COLUMNS) - 1) + ["banana"])
    with open(path, "w") as fh:
        fh.write(header + "\n" + row + "\n")
    with pytest.raises(FileFormatError, match="line 2"):
        read_diagnostics(path)
    with pytest.raises(FileFormatError, match="cannot read"):
        read_diagnostics(str(tmp_path / "absent.csv"))


def test_snapshot_roundtrip(tmp_path):
    rng = np.random.default_rng(21)
    p = Parameters()
    g = Grid(nx=12, ny=7, Lx=2.0, Ly=0.5)
    s = State(rng.random(g.shape), rng.random(g.shape),
              rng.random(g.shape), rng.random(g.shape),
              t=3.25, step_count=1300, clip_events=2)
    prefix = str(tmp_path / "snap")
    write_snapshot(s, prefix, p, g)
    back = read_snapshot(prefix)
    for name in ("a", "b", "v", "z"):
        assert np.array_equal(getattr(back, name), getattr(s, name))
    assert back.t == s.t
    assert back.step_count == s.step_count
    assert back.clip_events == s.clip_events
    g2 = snapshot_grid(prefix)
    assert g2 == g


def test_snapshot_malformed_inputs(tmp_path):
    import json
    p = Parameters()
    g = Grid(nx=4, ny=4)
    s = State(np.ones(g.shape), np.zeros(g.shape),
              np.zeros(g.shape), np.zeros(g.shape))
    prefix = str(tmp_path / "snap")
    write_snapshot(s, prefix, p, g)

    with open(prefix + ".json") as fh:
        side = json.load(fh)
    del side["step_count"]
    with open(prefix + ".json", "w") as fh:
        json.dump(side, fh)
    with pytest.raises(FileFormatError, match="missing key 'step_count'"):
        read_snapshot(prefix)

    write_snapshot(s, prefix, p, g)
    with open(prefix + ".a.bin", "rb") as fh:
        raw = fh.read()
    with open(prefix + ".a.bin", "wb") as fh:
        fh.write(raw[:-8])
    with pytest.raises(FileFormatError, match="sidecar says"):
        read_snapshot(prefix)

    with open(prefix + ".json", "w") as fh:
        fh.write("{not json")
    with pytest.raises(FileFormatError, match="malformed sidecar"):
        snapshot_grid(prefix)
    with pytest.raises(FileFormatError, match="cannot read sidecar"):
        read_snapshot(str(tmp_path / "nosuch"))


def test_parameter_hash_keys_on_values():
    p = Parameters()
    assert parameter_hash(p) == parameter_hash(Parameters())
    assert len(parameter_hash(p)) == 64
    assert parameter_hash(p) != parameter_hash(Parameters(beta=0.25))
    # a change that cancels numerically elsewhere must still rename the run
    assert parameter_hash(Parameters(D_u=0.2)) \
        != parameter_hash(Parameters(D_w=0.2))
