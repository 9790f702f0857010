import math

import numpy as np
import pytest

from qplab import (Frequency, cosine_potential, golden_frequency,
                   two_cosine_potential, two_torus_frequency, zero_potential)


@pytest.fixture(scope="session")
def golden():
    return golden_frequency()


@pytest.fixture(scope="session")
def omega2():
    return two_torus_frequency()


@pytest.fixture(scope="session")
def free():
    return zero_potential()


@pytest.fixture(scope="session")
def mathieu5():
    return cosine_potential(5.0)


@pytest.fixture(scope="session")
def two_cos():
    return two_cosine_potential(1.0)


def random_trig_potential(rng, degree=3, amplitude=1.0, dim=1, strip_width=2.0):
    """Conjugate-symmetric random trig polynomial for oracle checks."""
    from qplab import TrigPotential

    coeffs = {}
    if dim == 1:
        coeffs[(0,)] = complex(rng.uniform(-amplitude, amplitude), 0.0)
        for k in range(1, degree + 1):
            c = complex(rng.uniform(-amplitude, amplitude),
                        rng.uniform(-amplitude, amplitude))
            coeffs[(k,)] = c
            coeffs[(-k,)] = c.conjugate()
    else:
        coeffs[(0, 0)] = complex(rng.uniform(-amplitude, amplitude), 0.0)
        for k1 in range(-degree, degree + 1):
            for k2 in range(1, degree + 1):
                c = complex(rng.uniform(-amplitude, amplitude),
                            rng.uniform(-amplitude, amplitude))
                coeffs[(k1, k2)] = c
                coeffs[(-k1, -k2)] = c.conjugate()
    return TrigPotential(dim=dim, coeffs=coeffs, strip_width=strip_width)
