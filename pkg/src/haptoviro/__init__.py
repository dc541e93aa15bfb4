"""Deterministic 2D solver for a doubly haptotactic tumor-virus model.

Four fields on a rectangle with zero-flux walls: uninfected cells u,
extracellular matrix v, infected cells w, free virus z.  The primary scheme
integrates the weighted variables a = e^{-chi_u v} u, b = e^{-chi_w v} w,
whose no-flux condition is a plain Neumann condition; a direct upwind scheme
on the physical fields cross-validates it.  Diagnostics track the masses,
sup norms, entropy-type functionals and gradient integrals whose decay the
underlying analysis guarantees, and fit empirical rates against the
guaranteed exponents.
"""

from .config import FitSpec, RunConfig, parse_config, render_config
from .diagnostics import (DecayFit, DiagnosticsRecord, RateEntry, RateReport,
                          collect, default_fit_window, entropy_u, fit_decay,
                          llogl_monitors, lyapunov_F, rate_report)
from .errors import (ConfigError, DimensionError, DomainError, FileFormatError,
                     FitError, HaptoviroError, PositivityError, StateError,
                     StepError)
from .grid import (Grid, gradient_centered, gradient_quartic_integral,
                   gradient_sq_integral, laplacian, max_face_weight_ratio,
                   quadrature, weighted_diffusion)
from .io import (parameter_hash, read_diagnostics, read_snapshot,
                 snapshot_grid, write_diagnostics, write_rate_report,
                 write_snapshot)
from .model import (HomogeneousStateVector, OracleTrajectory, Parameters,
                    bernoulli_lower_bound, homogeneous_rhs, ode_oracle,
                    reaction_f, reaction_g, reaction_z, transform_from_ab,
                    transform_to_ab)
from .runs import (CANONICAL_SPEC, EQUILIBRIUM_SPEC, CosineProfile,
                   InitialSpec, make_initial, parse_profile, run)
from .solver import (SolverConfig, State, cfl_dt, check_state, step_direct,
                     step_transformed)

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_SPEC", "ConfigError", "CosineProfile", "DecayFit",
    "DiagnosticsRecord", "DimensionError", "DomainError", "EQUILIBRIUM_SPEC",
    "FileFormatError", "FitError", "FitSpec", "Grid", "HaptoviroError",
    "HomogeneousStateVector", "InitialSpec", "OracleTrajectory", "Parameters",
    "PositivityError", "RateEntry", "RateReport", "RunConfig", "SolverConfig",
    "State", "StateError", "StepError", "bernoulli_lower_bound", "cfl_dt",
    "check_state", "collect", "default_fit_window", "entropy_u", "fit_decay",
    "gradient_centered", "gradient_quartic_integral", "gradient_sq_integral",
    "homogeneous_rhs", "laplacian", "llogl_monitors", "lyapunov_F",
    "make_initial", "max_face_weight_ratio", "ode_oracle", "parameter_hash",
    "parse_config", "parse_profile", "quadrature", "rate_report",
    "read_diagnostics", "read_snapshot", "reaction_f", "reaction_g",
    "reaction_z", "render_config", "run", "snapshot_grid", "step_direct",
    "step_transformed", "transform_from_ab", "transform_to_ab",
    "weighted_diffusion", "write_diagnostics", "write_rate_report",
    "write_snapshot",
]
