"""Model coefficients, the weighted-variable transformation, reaction terms,
the logistic comparison bound, and a well-mixed (spatially homogeneous)
reference integrator.

The simulated system couples uninfected tumor cells u, infected cells w,
extracellular matrix density v and free virus z:

    u_t = D_u Lap(u) - xi_u div(u grad v) + mu_u u(1 - u) - rho u z
    w_t = D_w Lap(w) - xi_w div(w grad v) - w + rho u z
    v_t = -(alpha_u u + alpha_w w) v
    z_t = D_z Lap(z) - delta_z z - rho u z + beta w

with zero total normal flux on the boundary.  The solver works in the
weighted variables a = exp(-chi_u v) u and b = exp(-chi_w v) w, with
chi = xi / D, which turn the haptotactic cross-diffusion into weighted
self-diffusion plus the reaction terms `reaction_f` and `reaction_g` below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

_COEFFICIENTS = (
    "D_u", "D_w", "D_z", "xi_u", "xi_w", "mu_u",
    "rho", "alpha_u", "alpha_w", "delta_z", "beta",
)


@dataclass(frozen=True)
class Parameters:
    """All model coefficients, each strictly positive.

    The defaults are the package's reproducible baseline (unit rates, burst
    factor 1/2, diffusivities 0.1); they are a convention, not a measured or
    published parameter set.  chi_u and chi_w are always derived from xi and D
    and never stored independently.
    """

    D_u: float = 0.1
    D_w: float = 0.1
    D_z: float = 0.1
    xi_u: float = 1.0
    xi_w: float = 1.0
    mu_u: float = 1.0
    rho: float = 1.0
    alpha_u: float = 1.0
    alpha_w: float = 1.0
    delta_z: float = 1.0
    beta: float = 0.5

    def __post_init__(self) -> None:
        for name in _COEFFICIENTS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise DomainError(f"{name} must be a number, got {value!r}")
            value = float(value)
            if not math.isfinite(value) or value <= 0.0:
                raise DomainError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def chi_u(self) -> float:
        return self.xi_u / self.D_u

    @property
    def chi_w(self) -> float:
        return self.xi_w / self.D_w

    @property
    def convergence_regime(self) -> bool:
        """True iff the burst factor is subcritical (beta < 1).

        The acceptance suite requires this; beta >= 1 runs are exploratory and
        are flagged with a warning at config-parse time.
        """
        return self.beta < 1.0

    @property
    def mass_decay_bound(self) -> float:
        """Guaranteed decay rate of the combined infected+virus mass,
        min(1 - beta, delta_z).  Only meaningful in the convergence regime;
        nonpositive otherwise."""
        return min(1.0 - self.beta, self.delta_z)


@dataclass(frozen=True)
class HomogeneousStateVector:
    """One well-mixed state (u, v, w, z), all components finite and >= 0."""

    u: float
    v: float
    w: float
    z: float

    def __post_init__(self) -> None:
        for name in ("u", "v", "w", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0.0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w, self.z])


def _broadcast_check(**fields):
    shapes = [np.shape(x) for x in fields.values()]
    try:
        np.broadcast_shapes(*shapes)
    except ValueError:
        named = ", ".join(f"{k}{s}" for k, s in zip(fields, shapes))
        raise DimensionError(f"field shapes are not compatible: {named}") from None


def _nonneg_check(**fields):
    for name, x in fields.items():
        if np.any(np.asarray(x) < 0.0):
            raise DomainError(f"{name} must be nonnegative")


def transform_to_ab(u, w, v, p: Parameters):
    """Map the physical densities to the weighted variables:
    a = exp(-chi_u v) u, b = exp(-chi_w v) w."""
    _broadcast_check(u=u, w=w, v=v)
    _nonneg_check(u=u, w=w, v=v)
    a = np.exp(-p.chi_u * v) * u
    b = np.exp(-p.chi_w * v) * w
    return a, b


def transform_from_ab(a, b, v, p: Parameters):
    """Inverse of transform_to_ab: u = a exp(chi_u v), w = b exp(chi_w v)."""
    _broadcast_check(a=a, b=b, v=v)
    _nonneg_check(a=a, b=b, v=v)
    u = a * np.exp(p.chi_u * v)
    w = b * np.exp(p.chi_w * v)
    return u, w


def reaction_f(a, b, v, z, p: Parameters):
    """Reaction rate of a: logistic growth, infection loss, and the matrix
    degradation term that the transformation moves out of the flux."""
    _broadcast_check(a=a, b=b, v=v, z=z)
    _nonneg_check(a=a, b=b, v=v, z=z)
    ue = a * np.exp(p.chi_u * v)
    we = b * np.exp(p.chi_w * v)
    rn = p.alpha_u * ue + p.alpha_w * we
    return p.mu_u * a * (1.0 - ue) - p.rho * a * z + p.chi_u * a * rn * v


def reaction_g(a, b, v, z, p: Parameters):
    """Reaction rate of b: lysis decay, infection gain carrying the weight
    ratio exp((chi_u - chi_w) v), and the matrix degradation term.

    The ratio is evaluated as exp(chi_u v)/exp(chi_w v), the same two weight
    factors the diffusion stencil uses, so the stepper and this function agree
    to the bit.
    """
    _broadcast_check(a=a, b=b, v=v, z=z)
    _nonneg_check(a=a, b=b, v=v, z=z)
    eu = np.exp(p.chi_u * v)
    ew = np.exp(p.chi_w * v)
    ue = a * eu
    we = b * ew
    rn = p.alpha_u * ue + p.alpha_w * we
    return p.rho * a * z * (eu / ew) - b + p.chi_w * b * rn * v


def reaction_z(u, w, z, p: Parameters):
    """Reaction rate of the virus: replication from lysed cells minus natural
    decay and absorption by infection."""
    _broadcast_check(u=u, w=w, z=z)
    _nonneg_check(u=u, w=w, z=z)
    return p.beta * w - p.delta_z * z - p.rho * u * z


def bernoulli_lower_bound(a_init: float, t0: float, t: float, p: Parameters,
                          v0_max: float) -> float:
    """Closed-form solution of the comparison problem
    da/dt = a (mu_u/2 - K a), a(t0) = a_init, with K = exp(chi_u v0_max).

    Once the virus load has dropped below mu_u/(2 rho), the minimum of the
    weighted density a stays above this logistic curve.  Its infimum over
    t >= t0 is min(a_init, (mu_u/2) exp(-chi_u v0_max)).
    """
    a_init = float(a_init)
    if not math.isfinite(a_init) or a_init <= 0.0:
        raise DomainError(f"a_init must be positive, got {a_init!r}")
    if t < t0:
        raise DomainError(f"t={t!r} precedes t0={t0!r}")
    r = 0.5 * p.mu_u
    cap = r / math.exp(p.chi_u * v0_max)
    return cap / (1.0 + (cap / a_init - 1.0) * math.exp(-r * (t - t0)))


def homogeneous_rhs(y: np.ndarray, p: Parameters) -> np.ndarray:
    """Time derivative of the well-mixed system in the order (u, v, w, z)."""
    u, v, w, z = y
    du = p.mu_u * u * (1.0 - u) - p.rho * u * z
    dv = -(p.alpha_u * u + p.alpha_w * w) * v
    dw = p.rho * u * z - w
    dz = p.beta * w - p.delta_z * z - p.rho * u * z
    return np.array([du, dv, dw, dz])


@dataclass(frozen=True)
class OracleTrajectory:
    """Sampled well-mixed trajectory: times t and a (n, 4) array y with
    columns (u, v, w, z)."""

    t: np.ndarray
    y: np.ndarray
    clip_count: int = 0

    def __len__(self) -> int:
        return len(self.t)

    @property
    def u(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.y[:, 1]

    @property
    def w(self) -> np.ndarray:
        return self.y[:, 2]

    @property
    def z(self) -> np.ndarray:
        return self.y[:, 3]

    @property
    def final(self) -> HomogeneousStateVector:
        u, v, w, z = self.y[-1]
        return HomogeneousStateVector(u, v, w, z)


def ode_oracle(y0, p: Parameters, T: float, dt: float) -> OracleTrajectory:
    """Integrate the well-mixed system with the classical 4-stage Runge-Kutta
    scheme and return the per-step samples.

    The step size must resolve the reaction rates: dt below roughly
    1/(mu_u + rho z + delta_z + beta) keeps the trajectory nonnegative in
    practice.  Components dipping into [-1e-12, 0) are clamped to zero and
    counted; anything below -1e-12 raises, since that signals an unstable dt
    rather than rounding noise.
    """
    if isinstance(y0, HomogeneousStateVector):
        y = y0.as_array()
    else:
        y = np.asarray(y0, dtype=float).copy()
        if y.shape != (4,):
            raise DimensionError(f"y0 must have 4 components, got shape {y.shape}")
    if not np.all(np.isfinite(y)) or np.any(y < 0.0):
        raise DomainError("y0 must be finite and nonnegative")
    dt = float(dt)
    T = float(T)
    if not math.isfinite(dt) or dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    if T < 0.0:
        raise DomainError(f"T must be >= 0, got {T!r}")

    n_steps = max(0, math.ceil(T / dt - 1e-12))
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, 4))
    times[0] = 0.0
    states[0] = y
    clip_count = 0
    t = 0.0
    for k in range(n_steps):
        h = min(dt, T - t)
        k1 = homogeneous_rhs(y, p)
        k2 = homogeneous_rhs(y + 0.5 * h * k1, p)
        k3 = homogeneous_rhs(y + 0.5 * h * k2, p)
        k4 = homogeneous_rhs(y + h * k3, p)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        low = y.min()
        if low < -1e-12:
            raise DomainError(
                f"oracle step dt={dt} unstable: component reached {low:.3e} "
                f"at t={t + h:.6g}")
        if low < 0.0:
            clip_count += int(np.count_nonzero(y < 0.0))
            np.maximum(y, 0.0, out=y)
        t = t + h
        times[k + 1] = t
        states[k + 1] = y
    return OracleTrajectory(t=times, y=states, clip_count=clip_count)
