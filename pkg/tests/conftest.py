import numpy as np
import pytest

from udnsim import GridSpec, PhyParams, QueueParams, solve_mfg


@pytest.fixture(scope="session")
def phy():
    return PhyParams()


@pytest.fixture(scope="session")
def queue():
    return QueueParams()


@pytest.fixture(scope="session")
def small_solution(phy, queue):
    """One converged equilibrium on a coarse but CFL-safe grid, shared by the
    solver, scheduler, io and simulator tests."""
    grid = GridSpec(601, 21)
    return solve_mfg(grid, phy, queue, noise_norm=0.1)


@pytest.fixture(scope="session")
def interior_phy():
    return PhyParams(sbs_density=0.05)


@pytest.fixture(scope="session")
def interior_solution(interior_phy, queue):
    """Weakly coupled equilibrium whose power policy is mostly interior
    (not pinned at the box walls); used by shape and refinement tests."""
    grid = GridSpec(801, 21)
    return solve_mfg(grid, interior_phy, queue, noise_norm=0.05)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
