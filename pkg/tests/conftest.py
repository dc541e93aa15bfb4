import numpy as np
import pytest

from haptoviro import kernels
from haptoviro.grid import Grid
from haptoviro.model import Parameters
from haptoviro.runs import make_initial, run
from haptoviro.solver import SolverConfig


@pytest.fixture(scope="session")
def warm():
    """Compile (or load from cache) every jitted kernel before any test that
    asserts a wall-clock budget."""
    p = Parameters()
    g = Grid(nx=8, ny=8)
    s0 = make_initial(g, "canonical", p)
    for scheme in ("transformed", "direct-upwind"):
        run(s0, p, g, SolverConfig(t_end=0.02, cadence=0.01, scheme=scheme))
    kernels.clamp_small_negatives(np.zeros((2, 2)), np.zeros((2, 2)),
                                  np.full((2, 2), -1e-13))
