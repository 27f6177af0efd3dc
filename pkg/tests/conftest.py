import numpy as np
import pytest

from mistsim import CircuitParams, TransmonParams, preset
from mistsim.units import ghz, mhz


@pytest.fixture(scope="session")
def device_a():
    return preset("device-A")


@pytest.fixture(scope="session")
def device_b():
    return preset("device-B-multiharmonic")


@pytest.fixture(scope="session")
def toy_circuit():
    """Low-frequency toy circuit: cheap to propagate, fully generic."""
    t = TransmonParams(e_c=ghz(0.05), e_j=(ghz(1.0),))
    return CircuitParams(transmon=t, omega_r=ghz(0.21), g=mhz(4.0),
                         kappa=mhz(0.8))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
