import math

import numpy as np
import pytest

from paultrap.core_model import CONSTANTS, trap_config_from_frequencies

TAU = 2.0 * math.pi


@pytest.fixture(scope="session")
def default_trap():
    """The reference operating point: 2 GHz radial, 300 MHz axial, 10.6 GHz drive."""
    return trap_config_from_frequencies(TAU * 2e9, TAU * 300e6, TAU * 10.6e9)


@pytest.fixture(scope="session")
def reduced_trap():
    """Low-frequency configuration for q_x = 0.53 scans (400 MHz / 30 MHz)."""
    omega_r = TAU * 400e6
    omega_z = TAU * 30e6
    return trap_config_from_frequencies(omega_r, omega_z,
                                        2.0 * math.sqrt(2.0) * omega_r / 0.53)


@pytest.fixture(scope="session")
def constants():
    return CONSTANTS
