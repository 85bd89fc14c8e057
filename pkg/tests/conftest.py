import numpy as np
import pytest

from cavprot.presets import preset
from cavprot.units import ghz


@pytest.fixture(scope="session")
def gauss():
    return preset("nd-yvo-0.1pct", "gaussian")


@pytest.fixture(scope="session")
def lorentz():
    return preset("nd-yvo-0.1pct", "lorentzian")


@pytest.fixture(scope="session")
def double():
    return preset("nd-yvo-0.1pct", "double-gaussian")


def local_maxima_count(y):
    y = np.asarray(y)
    return int(np.sum((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])))


GHZ = ghz(1.0)
