"""Command-line surface: run, oracle, sweep and verify subcommands.

Exit codes: 0 success, 1 numerical failure (positivity loss, stability or
verification failure), 2 usage or configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .config import RunConfig, parse_config, render_config
from .diagnostics import collect, fit_decay, rate_report
from .errors import (ConfigError, FileFormatError, HaptoviroError,
                     PositivityError, StepError)
from .grid import Grid
from .io import (ensure_dir, write_diagnostics, write_rate_report,
                 write_snapshot)
from .model import (Parameters, homogeneous_rhs, ode_oracle, reaction_f,
                    reaction_g, reaction_z)
from .runs import make_initial, parse_profile, run
from .solver import SolverConfig, State, step_transformed

_CONSTANT_PROFILES = ("equilibrium", "homogeneous")
_IDENTITY_TOL = 1e-12


def _grid_spec(text: str):
    """'N' or 'NXxNY' with integer extents."""
    parts = text.lower().split("x")
    if len(parts) == 1:
        nx = ny = int(parts[0])
    elif len(parts) == 2:
        nx, ny = int(parts[0]), int(parts[1])
    else:
        raise ValueError(f"grid spec {text!r} is not N or NXxNY")
    return nx, ny


def _beta_list(text: str):
    values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    if not values:
        raise ValueError("empty beta list")
    return values


def _add_shared_flags(sub) -> None:
    sub.add_argument("config", help="run configuration file")
    sub.add_argument("--out", help="output directory (overrides the config)")
    sub.add_argument("--cadence", type=float,
                     help="diagnostics cadence override")
    sub.add_argument("--scheme",
                     choices=("transformed", "direct-upwind", "direct"),
                     help="stepping scheme override")
    sub.add_argument("--grid", type=_grid_spec, metavar="N[xM]",
                     help="grid extent override, N or NXxNY")
    sub.add_argument("--t-end", type=float, dest="t_end",
                     help="final time override; the final state is always "
                          "snapshotted when this is given")


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    solver = cfg.solver
    if getattr(args, "cadence", None) is not None:
        solver = replace(solver, cadence=args.cadence)
    if getattr(args, "scheme", None) is not None:
        name = {"direct": "direct-upwind"}.get(args.scheme, args.scheme)
        solver = replace(solver, scheme=name)
    snapshot_times = cfg.snapshot_times
    if getattr(args, "t_end", None) is not None:
        solver = replace(solver, t_end=args.t_end)
        kept = tuple(t for t in snapshot_times if t < args.t_end)
        snapshot_times = kept + (args.t_end,)
    grid = cfg.grid
    if getattr(args, "grid", None) is not None:
        nx, ny = args.grid
        grid = replace(grid, nx=nx, ny=ny)
    out_dir = args.out if getattr(args, "out", None) else cfg.output_dir
    return replace(cfg, solver=solver, grid=grid, output_dir=out_dir,
                   snapshot_times=snapshot_times)


def _l2(field, g: Grid) -> float:
    return float(math.sqrt(np.sum(field * field) * g.cell_area))


def _write_resolved(cfg: RunConfig) -> None:
    ensure_dir(cfg.output_dir)
    path = os.path.join(cfg.output_dir, "resolved.ini")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_config(cfg))


def cmd_run(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    _write_resolved(cfg)
    p, g = cfg.parameters, cfg.grid
    s0 = make_initial(g, cfg.initial_spec(), p)
    records = []
    pending = sorted(cfg.snapshot_times)

    def sink(s: State) -> None:
        records.append(collect(s, p, g))
        while pending and s.t >= pending[0] - 1e-9:
            req = pending.pop(0)
            prefix = os.path.join(cfg.output_dir, f"snapshot_t{req:g}")
            write_snapshot(s, prefix, p, g)

    final = run(s0, p, g, cfg.solver, sink=sink)
    write_diagnostics(records, os.path.join(cfg.output_dir, "diagnostics.csv"))
    print(f"run: t={final.t:g} steps={final.step_count} "
          f"clip_events={final.clip_events} scheme={cfg.solver.scheme} "
          f"grid={g.nx}x{g.ny}")
    if final.t > records[0].t:
        window = None
        if cfg.fit.t_lo is not None or cfg.fit.t_hi is not None:
            window = cfg.fit.window(records[0].t, final.t)
        report = rate_report(records, p, window=window)
        write_rate_report(report,
                          os.path.join(cfg.output_dir, "rate_report.json"))
        for entry in report.entries:
            if entry.fit is None:
                print(f"  {entry.quantity:<22s} {entry.verdict}")
            else:
                print(f"  {entry.quantity:<22s} rate={entry.fit.rate:+.4f} "
                      f"r2={entry.fit.r_squared:.4f} {entry.verdict}")
    return 0


def _constant_initial(cfg: RunConfig):
    name = cfg.profile_name.split("(")[0].strip()
    if name not in _CONSTANT_PROFILES:
        raise ConfigError(
            f"oracle needs a spatially constant profile "
            f"(equilibrium or homogeneous), got {cfg.profile_name!r}")
    spec = parse_profile(cfg.profile_name)
    return tuple(getattr(spec, f).const for f in ("u", "v", "w", "z"))


def cmd_oracle(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    _write_resolved(cfg)
    p = cfg.parameters
    y0 = _constant_initial(cfg)
    dt = cfg.solver.dt_override if cfg.solver.dt_override is not None else 1e-3
    traj = ode_oracle(y0, p, cfg.solver.t_end, dt)

    stride = max(1, round(cfg.solver.cadence / dt))
    idx = list(range(0, len(traj), stride))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)

    worst = {"f": 0.0, "g": 0.0, "z": 0.0}
    lines = ["t,u,v,w,z"]
    for k in idx:
        u, v, w, z = (float(c) for c in traj.y[k])
        lines.append(",".join(repr(val) for val in (float(traj.t[k]), u, v, w, z)))
        du, dv, dw, dz = homogeneous_rhs(np.array([u, v, w, z]), p)
        a = u * math.exp(-p.chi_u * v)
        b = w * math.exp(-p.chi_w * v)
        # The transformed reactions must reproduce the chain rule
        # d/dt (e^{-chi v} field) on constant-in-space states.
        chain_a = math.exp(-p.chi_u * v) * (du - p.chi_u * u * dv)
        chain_b = math.exp(-p.chi_w * v) * (dw - p.chi_w * w * dv)
        worst["f"] = max(worst["f"],
                         float(abs(float(reaction_f(a, b, v, z, p)) - chain_a)))
        worst["g"] = max(worst["g"],
                         float(abs(float(reaction_g(a, b, v, z, p)) - chain_b)))
        worst["z"] = max(worst["z"],
                         float(abs(float(reaction_z(u, w, z, p)) - dz)))

    csv_path = os.path.join(cfg.output_dir, "oracle.csv")
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    passed = bool(max(worst.values()) <= _IDENTITY_TOL)
    report = {"dt": dt, "samples": len(idx), "clip_count": traj.clip_count,
              "max_identity_error": worst, "tolerance": _IDENTITY_TOL,
              "passed": passed}
    with open(os.path.join(cfg.output_dir, "oracle_report.json"), "w",
              encoding="ascii") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"oracle: {len(idx)} samples, dt={dt:g}, identity errors "
          f"f={worst['f']:.2e} g={worst['g']:.2e} z={worst['z']:.2e}")
    if not passed:
        print("haptoviro: oracle identity check failed", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    betas = args.beta if args.beta is not None else (0.25, 0.5, 0.75)
    rows = []
    for beta in betas:
        try:
            p = replace(cfg.parameters, beta=beta)
        except HaptoviroError as exc:
            raise ConfigError(str(exc)) from exc
        sub = replace(cfg, parameters=p,
                      output_dir=os.path.join(cfg.output_dir, f"beta_{beta:g}"))
        _write_resolved(sub)
        g = sub.grid
        s0 = make_initial(g, sub.initial_spec(), p)
        records = []
        run(s0, p, g, sub.solver,
            sink=lambda s: records.append(collect(s, p, g)))
        write_diagnostics(records,
                          os.path.join(sub.output_dir, "diagnostics.csv"))
        report = rate_report(records, p)
        entry = report.entry("mass_w_plus_z")
        bound = min(1.0 - beta, p.delta_z)
        if entry.fit is None:
            rows.append((beta, math.nan, math.nan, bound, entry.verdict))
        else:
            rows.append((beta, entry.fit.rate, entry.fit.r_squared, bound,
                         entry.verdict))
    rows.sort(key=lambda r: r[0])

    summary = ["beta,rate,r_squared,bound,verdict"]
    print(f"{'beta':>6s} {'rate':>10s} {'r^2':>8s} {'bound':>8s}  verdict")
    for beta, rate, r2, bound, verdict in rows:
        verdict = verdict if beta < 1.0 else "n/a (beta >= 1)"
        summary.append(f"{beta!r},{rate!r},{r2!r},{bound!r},{verdict}")
        print(f"{beta:6g} {rate:10.4f} {r2:8.4f} {bound:8.4f}  {verdict}")
    ensure_dir(cfg.output_dir)
    path = os.path.join(cfg.output_dir, "sweep_summary.csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(summary) + "\n")
    return 0


def _verify_equilibrium(p: Parameters) -> dict:
    g = Grid(nx=32, ny=32)
    s = make_initial(g, "equilibrium", p)
    before = [f.copy() for f in (s.a, s.b, s.v, s.z)]
    dt = 0.5 * 0.4 * g.hx * g.hx / (4.0 * max(p.D_u, p.D_w, p.D_z))
    for _ in range(2000):
        s = step_transformed(s, p, g, dt)
    drift = max(float(np.abs(now - was).max()) for now, was in
                zip((s.a, s.b, s.v, s.z), before))
    return {"passed": drift <= 1e-12, "max_drift": drift, "steps": 2000}


def _mass_residual(p: Parameters, g: Grid, dt: float, t_end: float) -> float:
    from .grid import quadrature
    s = make_initial(g, "canonical", p)
    mw = quadrature(s.w(p), g)
    mz = quadrature(s.z, g)
    worst = 0.0
    for _ in range(round(t_end / dt)):
        s = step_transformed(s, p, g, dt)
        mw1 = quadrature(s.w(p), g)
        mz1 = quadrature(s.z, g)
        res = abs((mw1 + mz1 - mw - mz) / dt
                  + (1.0 - p.beta) * mw + p.delta_z * mz)
        worst = max(worst, res)
        mw, mz = mw1, mz1
    return worst


def _verify_mass_law(p: Parameters) -> dict:
    g = Grid(nx=32, ny=32)
    r1 = _mass_residual(p, g, 2.0 ** -12, 2.0)
    r2 = _mass_residual(p, g, 2.0 ** -13, 2.0)
    factor = r1 / r2 if r2 > 0.0 else math.inf
    return {"passed": 1.7 <= factor <= 2.3, "factor": factor,
            "residuals": [r1, r2]}


def _verify_self_convergence(p: Parameters) -> dict:
    g = Grid(nx=64, ny=64)
    s0 = make_initial(g, "canonical", p)
    ends = []
    for dt in (2.0 ** -13, 2.0 ** -14, 2.0 ** -15):
        cfg = SolverConfig(t_end=2.0, cadence=2.0, dt_override=dt)
        ends.append(run(s0, p, g, cfg).u(p))
    d1 = _l2(ends[0] - ends[1], g)
    d2 = _l2(ends[1] - ends[2], g)
    order = math.log2(d1 / d2) if d2 > 0.0 else math.inf
    return {"passed": 0.8 <= order <= 1.3, "order": order,
            "differences": [d1, d2]}


def _verify_cross_scheme(p: Parameters) -> dict:
    diffs = []
    for n in (64, 128):
        g = Grid(nx=n, ny=n)
        s0 = make_initial(g, "canonical", p)
        ends = {}
        for scheme in ("transformed", "direct-upwind"):
            cfg = SolverConfig(t_end=5.0, cadence=5.0, scheme=scheme)
            ends[scheme] = run(s0, p, g, cfg).u(p)
        diffs.append(_l2(ends["transformed"] - ends["direct-upwind"], g))
    shrink = diffs[0] / diffs[1] if diffs[1] > 0.0 else math.inf
    return {"passed": shrink >= 1.5, "shrink": shrink, "l2_diffs": diffs}


def _verify_invariants(p: Parameters) -> dict:
    g = Grid(nx=32, ny=32)
    s0 = make_initial(g, "canonical", p)
    mono = True
    nonneg = True
    prev = None

    def sink(s: State) -> None:
        nonlocal mono, nonneg, prev
        if prev is not None and not np.all(s.v <= prev):
            mono = False
        if min(s.a.min(), s.b.min(), s.v.min(), s.z.min()) < 0.0:
            nonneg = False
        prev = s.v.copy()

    final = run(s0, p, g, SolverConfig(t_end=5.0), sink=sink)
    ok = mono and nonneg and final.clip_events == 0
    return {"passed": ok, "v_monotone": mono, "nonnegative": nonneg,
            "clip_events": final.clip_events}


def cmd_verify(args) -> int:
    cfg = parse_config(args.config)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    p = cfg.parameters
    checks = {
        "equilibrium_fixed_point": _verify_equilibrium,
        "mass_law_residual_halving": _verify_mass_law,
        "self_convergence_order": _verify_self_convergence,
        "cross_scheme_shrink": _verify_cross_scheme,
        "positivity_and_monotonicity": _verify_invariants,
    }
    results = {}
    all_ok = True
    for name, fn in checks.items():
        res = fn(p)
        results[name] = res
        all_ok = all_ok and res["passed"]
        detail = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in res.items() if k != "passed")
        print(f"[{'OK' if res['passed'] else 'FAIL'}] {name}: {detail}")
    ensure_dir(cfg.output_dir)
    with open(os.path.join(cfg.output_dir, "verify_report.json"), "w",
              encoding="ascii") as fh:
        json.dump({"passed": all_ok, "checks": results}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    print(f"verify: {'all checks passed' if all_ok else 'FAILURES above'}")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haptoviro",
        description="Explicit solver for a haptotaxis-virus reaction "
                    "diffusion system with decay-rate diagnostics.")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("run", help="simulate and emit diagnostics, "
                                      "snapshots and the rate report")
    _add_shared_flags(sub)
    sub.set_defaults(func=cmd_run)

    sub = subs.add_parser("oracle", help="well-mixed ODE trajectory with "
                                         "reaction identity checks")
    _add_shared_flags(sub)
    sub.set_defaults(func=cmd_oracle)

    sub = subs.add_parser("sweep", help="independent runs over a beta list "
                                        "with a fitted-rate summary")
    _add_shared_flags(sub)
    sub.add_argument("--beta", type=_beta_list, metavar="B1,B2,...",
                     help="comma-separated beta values (default 0.25,0.5,0.75)")
    sub.set_defaults(func=cmd_sweep)

    sub = subs.add_parser("verify", help="self-convergence, cross-scheme "
                                         "and invariant checks")
    sub.add_argument("config", help="run configuration file")
    sub.add_argument("--out", help="output directory (overrides the config)")
    sub.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"haptoviro: {exc}", file=sys.stderr)
        return 2
    except (PositivityError, StepError) as exc:
        print(f"haptoviro: {exc}", file=sys.stderr)
        return 1
    except FileFormatError as exc:
        print(f"haptoviro: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"haptoviro: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
