"""Command-line interface: artifacts, determinism, exit codes."""

import json
import subprocess
import sys

import pytest

from haptoviro.cli import main
from haptoviro.config import parse_config
from haptoviro.io import read_diagnostics, read_snapshot

FAST_INI = ("[grid]\nnx = 16\nny = 16\n[solver]\nt_end = 1.0\n"
            "[output]\nsnapshot_times = 0, end\n")


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_usage_errors_and_help(capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["--help"]) == 0
    assert main(["run"]) == 2
    assert main(["run", "x.ini", "--grid", "16xx"]) == 2
    capsys.readouterr()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "haptoviro", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "run" in out.stdout and "verify" in out.stdout


def test_run_artifacts(tmp_path, capsys, warm):
    cfg = write(tmp_path, FAST_INI)
    out = tmp_path / "o"
    assert main(["run", cfg, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "run: t=1 steps=" in printed

    recs = read_diagnostics(str(out / "diagnostics.csv"))
    assert recs[0].t == 0.0 and recs[-1].t == 1.0
    assert len(recs) == 5

    resolved = parse_config(str(out / "resolved.ini"))
    assert resolved.grid.nx == 16
    assert resolved.solver.t_end == 1.0
    assert resolved.output_dir == str(out)

    for t_tag in ("0", "1"):
        s = read_snapshot(str(out / f"snapshot_t{t_tag}"))
        assert s.t == float(t_tag)
    report = json.loads((out / "rate_report.json").read_text())
    assert len(report["entries"]) == 10


def test_run_is_deterministic(tmp_path, capsys, warm):
    cfg = write(tmp_path, FAST_INI)
    assert main(["run", cfg, "--out", str(tmp_path / "r1")]) == 0
    assert main(["run", cfg, "--out", str(tmp_path / "r2")]) == 0
    capsys.readouterr()
    d1 = (tmp_path / "r1" / "diagnostics.csv").read_bytes()
    assert d1 == (tmp_path / "r2" / "diagnostics.csv").read_bytes()
    assert (tmp_path / "r1" / "snapshot_t1.a.bin").read_bytes() \
        == (tmp_path / "r2" / "snapshot_t1.a.bin").read_bytes()


def test_run_flags_override_config(tmp_path, capsys, warm):
    cfg = write(tmp_path, FAST_INI)
    out = tmp_path / "o"
    assert main(["run", cfg, "--out", str(out), "--grid", "8x16",
                 "--t-end", "0.5", "--cadence", "0.5",
                 "--scheme", "direct"]) == 0
    capsys.readouterr()
    resolved = parse_config(str(out / "resolved.ini"))
    assert (resolved.grid.nx, resolved.grid.ny) == (8, 16)
    assert resolved.solver.t_end == 0.5
    assert resolved.solver.scheme == "direct-upwind"
    assert resolved.snapshot_times == (0.0, 0.5)


def test_run_reports_equilibrium(tmp_path, capsys, warm):
    cfg = write(tmp_path,
                "[grid]\nnx = 16\nny = 16\n[solver]\nt_end = 1.0\n"
                "[initial]\nprofile = equilibrium\n"
                "[output]\nsnapshot_times =\n")
    out = tmp_path / "o"
    assert main(["run", cfg, "--out", str(out)]) == 0
    assert "already at equilibrium" in capsys.readouterr().out
    report = json.loads((out / "rate_report.json").read_text())
    assert all(e["verdict"] == "already at equilibrium"
               for e in report["entries"])


def test_oracle_on_constant_profile(tmp_path, capsys, warm):
    cfg = write(tmp_path,
                "[initial]\nprofile = homogeneous\n[solver]\nt_end = 2\n")
    out = tmp_path / "o"
    assert main(["oracle", cfg, "--out", str(out)]) == 0
    assert "identity errors" in capsys.readouterr().out
    report = json.loads((out / "oracle_report.json").read_text())
    assert report["passed"] is True
    assert all(v < 1e-12 for v in report["max_identity_error"].values())
    with open(out / "oracle.csv") as fh:
        assert fh.readline().strip() == "t,u,v,w,z"
        first = fh.readline().strip().split(",")
    assert [float(x) for x in first] == [0.0, 0.5, 1.0, 0.2, 0.2]


def test_oracle_rejects_spatial_profiles(tmp_path, capsys):
    cfg = write(tmp_path, FAST_INI)
    assert main(["oracle", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "spatially constant" in capsys.readouterr().err


def test_sweep_is_order_independent(tmp_path, capsys, warm):
    cfg = write(tmp_path, "[grid]\nnx = 16\nny = 16\n")
    common = ["--t-end", "4", "--grid", "16"]
    assert main(["sweep", cfg, "--out", str(tmp_path / "s1"),
                 "--beta", "0.25,0.75"] + common) == 0
    assert main(["sweep", cfg, "--out", str(tmp_path / "s2"),
                 "--beta", "0.75,0.25"] + common) == 0
    capsys.readouterr()
    for tag in ("beta_0.25", "beta_0.75"):
        assert (tmp_path / "s1" / tag / "diagnostics.csv").read_bytes() \
            == (tmp_path / "s2" / tag / "diagnostics.csv").read_bytes()
    rows = (tmp_path / "s2" / "sweep_summary.csv").read_text().splitlines()
    assert rows[0] == "beta,rate,r_squared,bound,verdict"
    assert [r.split(",")[0] for r in rows[1:]] == ["0.25", "0.75"]
    assert all(r.split(",")[-1] == "pass" for r in rows[1:])


def test_verify_suite(tmp_path, capsys, warm):
    cfg = write(tmp_path, "")
    out = tmp_path / "v"
    assert main(["verify", cfg, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert printed.count("[OK]") == 5 and "[FAIL]" not in printed
    report = json.loads((out / "verify_report.json").read_text())
    assert report["passed"] is True
    assert len(report["checks"]) == 5


def test_exit_taxonomy(tmp_path, capsys, warm):
    assert main(["run", str(tmp_path / "missing.ini")]) == 2

    blowup = write(tmp_path,
                   "[grid]\nnx = 16\nny = 16\n"
                   "[solver]\nt_end = 5\ncadence = 5\ndt_override = 2\n"
                   "[output]\nsnapshot_times =\n", name="blowup.ini")
    assert main(["run", blowup, "--out", str(tmp_path / "b")]) == 1
    assert "clip tolerance" in capsys.readouterr().err

    plain = tmp_path / "plainfile"
    plain.write_text("x")
    cfg = write(tmp_path, FAST_INI)
    assert main(["run", cfg, "--out", str(plain)]) == 3
    capsys.readouterr()
