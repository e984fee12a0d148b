import math

import numpy as np
import pytest

from sostree import boundary, ti
from sostree.model import ModelParams


@pytest.fixture(scope="session")
def fm_params():
    # ferromagnetic point with three symmetric solutions
    return ModelParams(k=2, m=2, J=-1.0, beta=2.0)


@pytest.fixture(scope="session")
def afm_params():
    return ModelParams(k=2, m=2, J=1.0, beta=1.0)


@pytest.fixture(scope="session")
def free_params():
    return ModelParams(k=2, m=2, J=0.0, beta=1.0)


@pytest.fixture(scope="session")
def cycle_params():
    # designated antiferromagnetic two-cycle point
    return ModelParams.from_theta(k=200, m=2, theta=1.07)


@pytest.fixture(scope="session")
def fm_roots(fm_params):
    return ti.solve_symmetric_roots(fm_params)


@pytest.fixture(scope="session")
def fm_high_field(fm_params, fm_roots):
    return boundary.constant_field(
        np.array([0.0, math.log(fm_roots[2])]), fm_params, 3)


@pytest.fixture(scope="session")
def afm_field(afm_params):
    z = ti.solve_symmetric_roots(afm_params)[0]
    return boundary.constant_field(np.array([0.0, math.log(z)]), afm_params, 3)
