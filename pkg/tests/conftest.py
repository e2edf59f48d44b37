import numpy as np
import pytest

from gavriflow.scenario import figure1_scenario
from gavriflow.profiles import integrate_profiles
from gavriflow.axisolver import solve_f
from gavriflow.minpoint import psi_taylor


@pytest.fixture(scope="session")
def fig1():
    return figure1_scenario()


@pytest.fixture(scope="session")
def fig1_profiles(fig1):
    return integrate_profiles(fig1)


@pytest.fixture(scope="session")
def fig1_window():
    # window between the two symmetry stations, away from the thin neck at z ~ -0.46
    return figure1_scenario(z_min=-0.4, z_max=0.6)


@pytest.fixture(scope="session")
def fig1_grid(fig1_window, fig1_profiles):
    return solve_f(fig1_window, fig1_profiles)


@pytest.fixture(scope="session")
def fig1_full_grid(fig1, fig1_profiles):
    return solve_f(fig1, fig1_profiles)


@pytest.fixture(scope="session")
def p5():
    return psi_taylor(5)


@pytest.fixture(scope="session")
def p16():
    return psi_taylor(16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
