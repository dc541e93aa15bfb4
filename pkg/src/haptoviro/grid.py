"""Uniform cell-centered rectangular mesh, zero-flux stencil operators,
discrete gradients and midpoint quadrature.

Fields are plain float64 arrays of shape (ny, nx), row-major with x fastest,
so field[j, i] sits at the cell center ((i + 1/2) hx, (j + 1/2) hy).  The
no-flux wall condition is realized by dropping wall-face fluxes, which is the
same as reflecting the field into ghost cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self) -> None:
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if not isinstance(n, int) or isinstance(n, bool) or n < 4:
                raise DomainError(f"{name} must be an integer >= 4, got {n!r}")
        for name in ("Lx", "Ly"):
            L = getattr(self, name)
            if not isinstance(L, (int, float)) or not math.isfinite(L) or L <= 0:
                raise DomainError(f"{name} must be a positive length, got {L!r}")
            object.__setattr__(self, name, float(L))

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def shape(self) -> tuple:
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    def cell_centers(self):
        """1D center coordinates (x of length nx, y of length ny)."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return x, y

    def meshes(self):
        """2D center coordinate arrays X, Y of shape (ny, nx)."""
        x, y = self.cell_centers()
        return np.meshgrid(x, y)


def check_field(f, g: Grid, name: str = "field", nonneg: bool = False) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != g.shape:
        raise DimensionError(
            f"{name} has shape {f.shape}, expected {g.shape} for this grid")
    if not np.all(np.isfinite(f)):
        raise DomainError(f"{name} contains non-finite entries")
    if nonneg and np.any(f < 0.0):
        raise DomainError(f"{name} contains negative entries")
    return f


def _weighted_div(a: np.ndarray, E: np.ndarray, D: float, g: Grid) -> np.ndarray:
    # Flux form: every interior face flux enters its two cells with opposite
    # signs, so the weighted cell sums telescope to zero exactly.
    ihx2 = 1.0 / (g.hx * g.hx)
    ihy2 = 1.0 / (g.hy * g.hy)
    fx = 0.5 * (E[:, :-1] + E[:, 1:]) * (a[:, 1:] - a[:, :-1])
    fy = 0.5 * (E[:-1, :] + E[1:, :]) * (a[1:, :] - a[:-1, :])
    dx = np.zeros_like(a)
    dx[:, :-1] += fx
    dx[:, 1:] -= fx
    dy = np.zeros_like(a)
    dy[:-1, :] += fy
    dy[1:, :] -= fy
    return D * (dx * ihx2 + dy * ihy2) / E


def weighted_diffusion(a, v, chi: float, D: float, g: Grid) -> np.ndarray:
    """Discrete D exp(-chi v) div(exp(chi v) grad a) with zero-flux walls.

    Face weights are arithmetic means of exp(chi v) at the two adjacent
    centers.  Summing the output against the weight exp(chi v) over all cells
    gives zero for any input (discrete conservation).
    """
    a = check_field(a, g, "a")
    v = check_field(v, g, "v")
    E = np.exp(chi * v)
    return _weighted_div(a, E, D, g)


def laplacian(z, D: float, g: Grid) -> np.ndarray:
    """Five-point Laplacian with zero-flux walls, scaled by D.  Identical to
    weighted_diffusion with chi = 0 by sharing its flux code with unit
    weights."""
    z = check_field(z, g, "z")
    return _weighted_div(z, np.ones_like(z), D, g)


def gradient_centered(v, g: Grid):
    """Per-axis gradient at cell centers assembled from face differences.

    Interior cells average their two face differences.  Wall cells use the
    single interior face difference: the physical wall face carries zero flux,
    and averaging that zero in would cost an order of accuracy at the
    boundary.
    """
    v = check_field(v, g, "v")
    dvx = (v[:, 1:] - v[:, :-1]) / g.hx
    dvy = (v[1:, :] - v[:-1, :]) / g.hy
    gx = np.empty_like(v)
    gx[:, 1:-1] = 0.5 * (dvx[:, :-1] + dvx[:, 1:])
    gx[:, 0] = dvx[:, 0]
    gx[:, -1] = dvx[:, -1]
    gy = np.empty_like(v)
    gy[1:-1, :] = 0.5 * (dvy[:-1, :] + dvy[1:, :])
    gy[0, :] = dvy[0, :]
    gy[-1, :] = dvy[-1, :]
    return gx, gy


def gradient_sq_field(v, g: Grid) -> np.ndarray:
    gx, gy = gradient_centered(v, g)
    return gx * gx + gy * gy


def gradient_sq_integral(v, g: Grid) -> float:
    """Midpoint integral of |grad v|^2."""
    return quadrature(gradient_sq_field(v, g), g)


def gradient_quartic_integral(v, g: Grid) -> float:
    """Midpoint integral of |grad v|^4, i.e. of (|grad v|^2)^2."""
    sq = gradient_sq_field(v, g)
    return quadrature(sq * sq, g)


def quadrature(f, g: Grid) -> float:
    """Midpoint rule: sum(f) hx hy."""
    f = check_field(f, g, "integrand")
    return float(np.sum(f) * g.cell_area)


def max_face_weight_ratio(v, chi: float) -> float:
    """Worst ratio of a face weight to the smaller adjacent cell weight for
    the exp(chi v) weighting.  Equals 1 for constant v and feeds the
    effective diffusivity in the step-size bound."""
    E = np.exp(chi * np.asarray(v, dtype=float))
    rx = 0.5 * (E[:, :-1] + E[:, 1:]) / np.minimum(E[:, :-1], E[:, 1:])
    ry = 0.5 * (E[:-1, :] + E[1:, :]) / np.minimum(E[:-1, :], E[1:, :])
    return float(max(rx.max(), ry.max()))
