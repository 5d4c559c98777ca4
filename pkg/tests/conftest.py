"""Shared fixtures.

The helium ground state at production resolution takes a few seconds to
relax, so it is computed once per session and shared by every test that
needs a physically meaningful initial state.  Unit tests that only need
plumbing use the coarse variant.
"""

import pytest

from expstep.grid import UniformGrid
from expstep.mctdhf import HeliumModel, ground_state


@pytest.fixture(scope="session")
def helium_model():
    return HeliumModel(grid=UniformGrid(256, 40.0), n_orbitals=2).without_laser()


@pytest.fixture(scope="session")
def helium_ground(helium_model):
    return ground_state(helium_model, tol=1e-9)


@pytest.fixture(scope="session")
def small_model():
    # coarse grid; fast to relax, good enough for interface-level tests
    return HeliumModel(grid=UniformGrid(64, 20.0), n_orbitals=2).without_laser()


@pytest.fixture(scope="session")
def small_ground(small_model):
    return ground_state(small_model, tol=1e-8, taus=(0.05, 0.01))
