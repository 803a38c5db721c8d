import numpy as np
import pytest

import lamlab


@pytest.fixture(scope="session")
def golden():
    return np.asarray([lamlab.GOLDEN_MEAN])


@pytest.fixture(scope="session")
def model1():
    # two-well background, nearest-neighbor coupling, one dimension
    pot = lamlab.builtin_n_well(2)
    sten = lamlab.builtin_harmonic_stencil(1)
    return lamlab.build_model(pot, sten, omega=[lamlab.GOLDEN_MEAN])


@pytest.fixture(scope="session")
def model1_single():
    pot = lamlab.builtin_n_well(1)
    sten = lamlab.builtin_harmonic_stencil(1)
    return lamlab.build_model(pot, sten, omega=[lamlab.GOLDEN_MEAN])


@pytest.fixture(scope="session")
def model2():
    pot = lamlab.builtin_n_well(2)
    sten = lamlab.builtin_harmonic_stencil(2)
    omega = [np.sqrt(2.0) - 1.0, np.sqrt(3.0) - 1.0]
    return lamlab.build_model(pot, sten, omega=omega)
