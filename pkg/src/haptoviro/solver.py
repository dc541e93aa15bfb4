"""Explicit time integration of the weighted and the physical formulation.

A step has two phases.  The matrix field decays exactly per cell first, so
the stencil weights and the reaction terms both see the updated v; the cell
and virus fields then take one forward-Euler update reading only pre-update
values.  The virus reaction is the exception: it consumes the physical cell
densities reconstructed before the matrix decay, which is what makes the
discrete combined-mass identity for w and z exact to O(dt^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, PositivityError, StateError, StepError
from .grid import Grid, max_face_weight_ratio
from .model import Parameters

SCHEMES = ("transformed", "direct-upwind")

STATE_FIELDS = ("a", "b", "v", "z")


@dataclass
class State:
    """Discrete solution at one instant, stored in the weighted variables.

    The physical densities are reconstructed views (u and w methods), never
    stored, so the two representations cannot drift apart.  clip_events
    counts negativity clamps accumulated since t=0.
    """

    a: np.ndarray
    b: np.ndarray
    v: np.ndarray
    z: np.ndarray
    t: float = 0.0
    step_count: int = 0
    clip_events: int = 0

    def __post_init__(self):
        for name in STATE_FIELDS:
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))
        self.t = float(self.t)
        self.step_count = int(self.step_count)
        self.clip_events = int(self.clip_events)

    def copy(self) -> "State":
        return State(self.a.copy(), self.b.copy(), self.v.copy(), self.z.copy(),
                     t=self.t, step_count=self.step_count, clip_events=self.clip_events)

    def u(self, p: Parameters) -> np.ndarray:
        return self.a * np.exp(p.chi_u * self.v)

    def w(self, p: Parameters) -> np.ndarray:
        return self.b * np.exp(p.chi_w * self.v)


def check_state(s: State, g: Grid) -> None:
    """Shape, finiteness and sign checks shared by every state consumer."""
    for name in STATE_FIELDS:
        f = getattr(s, name)
        if f.shape != g.shape:
            raise StateError(
                f"state field {name} has shape {f.shape}, grid wants {g.shape}")
        if not np.all(np.isfinite(f)):
            raise StateError(f"state field {name} contains non-finite entries")
        if np.any(f < 0.0):
            raise StateError(f"state field {name} contains negative entries")


@dataclass(frozen=True)
class SolverConfig:
    t_end: float
    cadence: float = 0.25
    scheme: str = "transformed"
    cfl_safety: float = 0.4
    clip_tolerance: float = 1e-12
    dt_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "cadence", float(self.cadence))
        object.__setattr__(self, "cfl_safety", float(self.cfl_safety))
        object.__setattr__(self, "clip_tolerance", float(self.clip_tolerance))
        if not (math.isfinite(self.t_end) and self.t_end >= 0.0):
            raise DomainError("t_end must be nonnegative and finite")
        if not (math.isfinite(self.cadence) and self.cadence > 0.0):
            raise DomainError("cadence must be positive")
        if self.scheme not in SCHEMES:
            raise DomainError(
                f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0.0 < self.cfl_safety <= 0.9:
            raise DomainError("cfl_safety must lie in (0, 0.9]")
        if self.clip_tolerance < 0.0:
            raise DomainError("clip_tolerance must be nonnegative")
        if self.dt_override is not None:
            object.__setattr__(self, "dt_override", float(self.dt_override))
            if not (math.isfinite(self.dt_override) and self.dt_override > 0.0):
                raise DomainError("dt_override must be positive")


def _reaction_lipschitz(p: Parameters, u_max, w_max, z_max, v_max, a_max) -> float:
    """Crude row-sum bound on the reaction Jacobian from current maxima.
    Deliberately generous; the diffusion bound governs on every shipped
    configuration, this one only guards pathological parameter choices."""
    er = math.exp(abs(p.chi_u - p.chi_w) * v_max)
    lf = (p.mu_u * (1.0 + 2.0 * u_max) + p.rho * z_max
          + p.chi_u * v_max * (2.0 * p.alpha_u * u_max + p.alpha_w * w_max)
          + p.chi_u * p.alpha_w * v_max * u_max * er
          + p.rho * a_max)
    lg = (1.0 + p.rho * z_max * er + p.rho * a_max * er
          + p.chi_w * p.alpha_u * v_max * w_max * er
          + p.chi_w * v_max * (p.alpha_u * u_max + 2.0 * p.alpha_w * w_max))
    lz = p.delta_z + p.rho * u_max + p.beta
    return max(lf, lg, lz)


def cfl_dt(p: Parameters, g: Grid, s: State, *,
           cfl_safety: float = 1.0, scheme: str = "transformed") -> float:
    """Largest trusted step size for the current state.

    Diffusion limit: dt <= 1 / (2 D r (hx^-2 + hy^-2)) per field, where r is
    the worst face-weight ratio of the exp(chi v) weighting (r = 1 for the
    unweighted virus operator).  The direct scheme replaces r by an upwind
    advection term xi |dv| / h^2 per axis.  A reaction-Lipschitz limit from
    the current field maxima is taken alongside; the returned dt is
    cfl_safety times the smaller of the two.
    """
    if not 0.0 < float(cfl_safety) <= 1.0:
        raise DomainError("cfl_safety must lie in (0, 1]")
    if scheme not in SCHEMES:
        raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    check_state(s, g)
    ihx2 = 1.0 / (g.hx * g.hx)
    ihy2 = 1.0 / (g.hy * g.hy)
    u_max = float(s.u(p).max())
    w_max = float(s.w(p).max())
    z_max = float(s.z.max())
    v_max = float(s.v.max())
    a_max = float(s.a.max())
    if scheme == "transformed":
        d_u = 2.0 * p.D_u * max_face_weight_ratio(s.v, p.chi_u) * (ihx2 + ihy2)
        d_w = 2.0 * p.D_w * max_face_weight_ratio(s.v, p.chi_w) * (ihx2 + ihy2)
    else:
        ihx = 1.0 / g.hx
        ihy = 1.0 / g.hy
        vx = float(np.abs(np.diff(s.v, axis=1)).max()) * ihx
        vy = float(np.abs(np.diff(s.v, axis=0)).max()) * ihy
        d_u = 2.0 * p.D_u * (ihx2 + ihy2) + p.xi_u * vx * ihx + p.xi_u * vy * ihy
        d_w = 2.0 * p.D_w * (ihx2 + ihy2) + p.xi_w * vx * ihx + p.xi_w * vy * ihy
    d_z = 2.0 * p.D_z * (ihx2 + ihy2)
    diffusive = 1.0 / max(d_u, d_w, d_z)
    reactive = 1.0 / _reaction_lipschitz(p, u_max, w_max, z_max, v_max, a_max)
    return float(cfl_safety) * min(diffusive, reactive)


def _settle(gmin: float, clip_tolerance: float, names, fields, t, step_index) -> int:
    """Apply the negativity policy to freshly written fields: accept, clamp
    and count, or abort naming the worst offender."""
    if gmin >= 0.0:
        return 0
    if gmin < -clip_tolerance:
        for name, f in zip(names, fields):
            if float(f.min()) == gmin:
                j, i = np.unravel_index(int(np.argmin(f)), f.shape)
                raise PositivityError(
                    f"{name} reached {gmin:.6e} at cell ({j}, {i}) during step "
                    f"{step_index} (t={t:.6g}); magnitude exceeds the clip "
                    f"tolerance {clip_tolerance:.1e}",
                    field=name, cell=(int(j), int(i)), value=gmin)
    return kernels.clamp_small_negatives(*fields)


def step_transformed(s: State, p: Parameters, g: Grid, dt: float, *,
                     clip_tolerance: float = 1e-12,
                     check_cfl: bool = True) -> State:
    """One forward-Euler step of the weighted system.

    Equivalent to composing the operators in grid.py and model.py in the
    documented order; tests pin the compiled path against that composition
    bit for bit.  check_cfl=False skips the stability guard so tests can
    drive the step into the negativity policy on purpose.
    """
    dt = float(dt)
    if not (math.isfinite(dt) and dt > 0.0):
        raise DomainError("dt must be positive and finite")
    check_state(s, g)
    if check_cfl:
        limit = cfl_dt(p, g, s, scheme="transformed")
        if dt > limit * (1.0 + 1e-9):
            raise StepError(
                f"dt={dt:.6e} exceeds the stability bound {limit:.6e} "
                f"for the transformed scheme")
    u_old = s.a * np.exp(p.chi_u * s.v)
    w_old = s.b * np.exp(p.chi_w * s.v)
    v_new = s.v * np.exp(-(p.alpha_u * u_old + p.alpha_w * w_old) * dt)
    eu = np.exp(p.chi_u * v_new)
    ew = np.exp(p.chi_w * v_new)
    an = np.empty_like(s.a)
    bn = np.empty_like(s.b)
    zn = np.empty_like(s.z)
    gmin = kernels.fused_update(
        s.a, s.b, v_new, s.z, eu, ew, u_old, w_old, an, bn, zn, dt,
        p.D_u, p.D_w, p.D_z, 1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy),
        p.mu_u, p.rho, p.chi_u, p.chi_w, p.alpha_u, p.alpha_w,
        p.delta_z, p.beta)
    clips = _settle(gmin, clip_tolerance, ("a", "b", "z"), (an, bn, zn),
                    s.t, s.step_count)
    return State(an, bn, v_new, zn, t=s.t + dt,
                 step_count=s.step_count + 1,
                 clip_events=s.clip_events + clips)


def step_direct(s: State, p: Parameters, g: Grid, dt: float, *,
                clip_tolerance: float = 1e-12,
                check_cfl: bool = True) -> State:
    """One forward-Euler step of the physical system with upwind haptotaxis.

    The state contract stays in the weighted variables: the physical fields
    are reconstructed on entry and folded back after the update, both against
    the post-decay matrix.  Negativity policy applies to the physical fields
    before folding, so clamped zeros stay exact.
    """
    dt = float(dt)
    if not (math.isfinite(dt) and dt > 0.0):
        raise DomainError("dt must be positive and finite")
    check_state(s, g)
    if check_cfl:
        limit = cfl_dt(p, g, s, scheme="direct-upwind")
        if dt > limit * (1.0 + 1e-9):
            raise StepError(
                f"dt={dt:.6e} exceeds the stability bound {limit:.6e} "
                f"for the direct-upwind scheme")
    u = s.a * np.exp(p.chi_u * s.v)
    w = s.b * np.exp(p.chi_w * s.v)
    v_new = s.v * np.exp(-(p.alpha_u * u + p.alpha_w * w) * dt)
    un = np.empty_like(u)
    wn = np.empty_like(w)
    zn = np.empty_like(s.z)
    gmin = kernels.fused_update_direct(
        u, w, v_new, s.z, un, wn, zn, dt,
        p.D_u, p.D_w, p.D_z, p.xi_u, p.xi_w,
        1.0 / g.hx, 1.0 / g.hy, 1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy),
        p.mu_u, p.rho, p.delta_z, p.beta)
    clips = _settle(gmin, clip_tolerance, ("u", "w", "z"), (un, wn, zn),
                    s.t, s.step_count)
    an = un * np.exp(-p.chi_u * v_new)
    bn = wn * np.exp(-p.chi_w * v_new)
    return State(an, bn, v_new, zn, t=s.t + dt,
                 step_count=s.step_count + 1,
                 clip_events=s.clip_events + clips)
