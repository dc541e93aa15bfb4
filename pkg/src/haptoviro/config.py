"""Sectioned key-value run configuration: strict parsing, default
resolution and a resolved-config echo for reproducibility.

The grammar is INI-style with five optional sections ([parameters], [grid],
[solver], [initial], [output], [fit]).  Every key is optional; an empty file
resolves to the canonical demonstration setup (128x128 unit square, beta=0.5,
t_end=60, cosine-perturbed initial data).  Unknown sections or keys are
rejected by name so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import io
import math
import warnings
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError
from .grid import Grid
from .model import Parameters
from .runs import CosineProfile, InitialSpec, parse_profile
from .solver import SCHEMES, SolverConfig

_PARAMETER_KEYS = ("D_u", "D_w", "D_z", "xi_u", "xi_w", "mu_u", "rho",
                   "alpha_u", "alpha_w", "delta_z", "beta")
_GRID_KEYS = ("nx", "ny", "Lx", "Ly")
_SOLVER_KEYS = ("t_end", "cadence", "scheme", "cfl_safety",
                "clip_tolerance", "dt_override")
_OUTPUT_KEYS = ("directory", "snapshot_times")
_FIT_KEYS = ("t_lo", "t_hi")
_FIELDS = ("u", "v", "w", "z")
_PROFILE_PARTS = ("const", "amp", "kx", "ky")

DEFAULT_T_END = 60.0
DEFAULT_SNAPSHOT_TIMES = "0, 10, end"
DEFAULT_DIRECTORY = "out"

# "direct" is accepted on input as a convenience; the solver itself only
# knows the explicit scheme names.
_SCHEME_ALIASES = {"direct": "direct-upwind"}


@dataclass(frozen=True)
class FitSpec:
    """Optional override of the rate-fit window; None means the default
    final-half window of the run."""
    t_lo: float | None = None
    t_hi: float | None = None

    def __post_init__(self) -> None:
        for name in ("t_lo", "t_hi"):
            val = getattr(self, name)
            if val is None:
                continue
            if not math.isfinite(val):
                raise DomainError(f"{name} must be finite, got {val!r}")
            object.__setattr__(self, name, float(val))
        if (self.t_lo is not None and self.t_hi is not None
                and not self.t_lo < self.t_hi):
            raise DomainError(
                f"fit window needs t_lo < t_hi, got [{self.t_lo}, {self.t_hi}]")

    def window(self, t0: float, t_end: float):
        from .diagnostics import default_fit_window
        lo, hi = default_fit_window(t0, t_end)
        return (lo if self.t_lo is None else self.t_lo,
                hi if self.t_hi is None else self.t_hi)


@dataclass(frozen=True)
class RunConfig:
    parameters: Parameters = field(default_factory=Parameters)
    grid: Grid = field(default_factory=lambda: Grid(nx=128, ny=128))
    solver: SolverConfig = field(
        default_factory=lambda: SolverConfig(t_end=DEFAULT_T_END))
    profile_name: str = "canonical"
    initial: InitialSpec | None = None
    output_dir: str = DEFAULT_DIRECTORY
    snapshot_times: tuple = ()
    fit: FitSpec = field(default_factory=FitSpec)

    def initial_spec(self) -> InitialSpec | str:
        """What runs.make_initial should receive."""
        return self.initial if self.initial is not None else self.profile_name


def _parse_float(section: str, key: str, text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise ConfigError(
            f"{section}.{key}: expected a decimal number, got {text!r}") from None
    if not math.isfinite(val):
        raise ConfigError(f"{section}.{key}: must be finite, got {text!r}")
    return val


def _parse_int(section: str, key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(
            f"{section}.{key}: expected an integer, got {text!r}") from None


def _read_document(path: str) -> configparser.ConfigParser:
    doc = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                    interpolation=None)
    doc.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from exc
    return doc


def _section(doc: configparser.ConfigParser, name: str, allowed) -> dict:
    if not doc.has_section(name):
        return {}
    out = {}
    for key, value in doc.items(name):
        if key not in allowed:
            raise ConfigError(f"unknown key '{name}.{key}'")
        out[key] = value.strip()
    return out


def _build_parameters(raw: dict) -> Parameters:
    kwargs = {k: _parse_float("parameters", k, v) for k, v in raw.items()}
    try:
        return Parameters(**kwargs)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _build_grid(raw: dict) -> Grid:
    kwargs = {}
    for key, value in raw.items():
        if key in ("nx", "ny"):
            kwargs[key] = _parse_int("grid", key, value)
        else:
            kwargs[key] = _parse_float("grid", key, value)
    kwargs.setdefault("nx", 128)
    kwargs.setdefault("ny", 128)
    try:
        return Grid(**kwargs)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _build_solver(raw: dict) -> SolverConfig:
    kwargs = {}
    for key, value in raw.items():
        if key == "scheme":
            scheme = _SCHEME_ALIASES.get(value, value)
            if scheme not in SCHEMES:
                raise ConfigError(
                    f"solver.scheme: unknown scheme {value!r}; "
                    f"choose from {', '.join(SCHEMES)}")
            kwargs[key] = scheme
        elif key == "dt_override":
            if value.lower() == "none":
                kwargs[key] = None
            else:
                kwargs[key] = _parse_float("solver", key, value)
        else:
            kwargs[key] = _parse_float("solver", key, value)
    kwargs.setdefault("t_end", DEFAULT_T_END)
    try:
        return SolverConfig(**kwargs)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _build_initial(doc: configparser.ConfigParser):
    """Returns (profile_name, InitialSpec | None)."""
    if not doc.has_section("initial"):
        return "canonical", None
    raw = dict(doc.items("initial"))
    profile = raw.pop("profile", "canonical").strip()
    if profile != "cosine":
        if raw:
            stray = sorted(raw)[0]
            raise ConfigError(
                f"initial.{stray} only applies to profile = cosine")
        try:
            parse_profile(profile)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        return profile, None
    parts = {}
    for key, value in raw.items():
        try:
            fld, part = key.split("_", 1)
        except ValueError:
            fld, part = key, ""
        if fld not in _FIELDS or part not in _PROFILE_PARTS:
            raise ConfigError(f"unknown key 'initial.{key}'")
        if part in ("kx", "ky"):
            parts[key] = _parse_int("initial", key, value)
        else:
            parts[key] = _parse_float("initial", key, value)
    profiles = {}
    try:
        for fld in _FIELDS:
            profiles[fld] = CosineProfile(
                const=parts.get(f"{fld}_const", 0.0),
                amp=parts.get(f"{fld}_amp", 0.0),
                kx=parts.get(f"{fld}_kx", 0),
                ky=parts.get(f"{fld}_ky", 0))
        spec = InitialSpec(**profiles)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    return "cosine", spec


def _parse_snapshot_times(text: str, t_end: float,
                          lenient: bool = False) -> tuple:
    # lenient mode serves the built-in default list, whose fixed entries
    # may exceed a short horizon; explicit user times must stay in range
    times = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token.lower() == "end":
            times.append(t_end)
            continue
        val = _parse_float("output", "snapshot_times", token)
        if val < 0.0 or val > t_end:
            if lenient:
                continue
            raise ConfigError(
                f"output.snapshot_times: {val:g} outside [0, t_end={t_end:g}]")
        times.append(val)
    return tuple(sorted(set(times)))


def parse_config(path: str) -> RunConfig:
    """Parse and fully resolve a run configuration document.

    Raises ConfigError naming the offending key for unknown keys or
    sections and re-raises block invariant violations under the same type.
    """
    doc = _read_document(path)
    known = {"parameters", "grid", "solver", "initial", "output", "fit"}
    for name in doc.sections():
        if name not in known:
            raise ConfigError(f"unknown section '[{name}]'")

    params = _build_parameters(_section(doc, "parameters", _PARAMETER_KEYS))
    grid = _build_grid(_section(doc, "grid", _GRID_KEYS))
    solver = _build_solver(_section(doc, "solver", _SOLVER_KEYS))
    profile_name, initial = _build_initial(doc)
    out_raw = _section(doc, "output", _OUTPUT_KEYS)
    directory = out_raw.get("directory", DEFAULT_DIRECTORY)
    snap_text = out_raw.get("snapshot_times")
    snapshot_times = _parse_snapshot_times(
        snap_text if snap_text is not None else DEFAULT_SNAPSHOT_TIMES,
        solver.t_end, lenient=snap_text is None)
    fit_raw = _section(doc, "fit", _FIT_KEYS)
    try:
        fit = FitSpec(**{k: _parse_float("fit", k, v)
                         for k, v in fit_raw.items()})
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc

    if params.beta >= 1.0:
        warnings.warn(
            f"beta = {params.beta:g} >= 1: outside the guaranteed decay "
            "regime, mass bounds and rate checks do not apply",
            stacklevel=2)
    return RunConfig(parameters=params, grid=grid, solver=solver,
                     profile_name=profile_name, initial=initial,
                     output_dir=directory, snapshot_times=snapshot_times,
                     fit=fit)


def _format_value(val) -> str:
    if val is None:
        return "none"
    if isinstance(val, float):
        return repr(val)
    return str(val)


def render_config(cfg: RunConfig) -> str:
    """Serialize a fully resolved RunConfig back into the input grammar.

    parse_config on the rendered text reproduces cfg exactly, which is what
    makes the echoed file a complete reproduction recipe.
    """
    buf = io.StringIO()
    buf.write("# resolved configuration: every default spelled out\n")
    p = cfg.parameters
    if p.beta >= 1.0:
        buf.write("# note: beta >= 1 is outside the guaranteed decay "
                  "regime\n")
    buf.write("[parameters]\n")
    for key in _PARAMETER_KEYS:
        buf.write(f"{key} = {_format_value(getattr(p, key))}\n")
    g = cfg.grid
    buf.write("\n[grid]\n")
    for key in _GRID_KEYS:
        buf.write(f"{key} = {_format_value(getattr(g, key))}\n")
    s = cfg.solver
    buf.write("\n[solver]\n")
    for key in _SOLVER_KEYS:
        buf.write(f"{key} = {_format_value(getattr(s, key))}\n")
    buf.write("\n[initial]\n")
    if cfg.initial is None:
        buf.write(f"profile = {cfg.profile_name}\n")
    else:
        buf.write("profile = cosine\n")
        for fld in _FIELDS:
            prof = getattr(cfg.initial, fld)
            for part in _PROFILE_PARTS:
                buf.write(f"{fld}_{part} = "
                          f"{_format_value(getattr(prof, part))}\n")
    buf.write("\n[output]\n")
    buf.write(f"directory = {cfg.output_dir}\n")
    times = ", ".join(_format_value(t) for t in cfg.snapshot_times)
    buf.write(f"snapshot_times = {times}\n")
    buf.write("\n[fit]\n")
    if cfg.fit.t_lo is not None:
        buf.write(f"t_lo = {_format_value(cfg.fit.t_lo)}\n")
    if cfg.fit.t_hi is not None:
        buf.write(f"t_hi = {_format_value(cfg.fit.t_hi)}\n")
    return buf.getvalue()
