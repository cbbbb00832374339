import pytest

from grav1d import npoint
from grav1d.partition import closed_form_Z, free_energy, recommended_spec


@pytest.fixture(scope="session")
def spec6():
    return recommended_spec(6, 6, 3)


@pytest.fixture(scope="session")
def Z6(spec6):
    return closed_form_Z(spec6)


@pytest.fixture(scope="session")
def F6(Z6):
    return free_energy(Z6)


@pytest.fixture(scope="session")
def wide_spec6(spec6):
    return npoint.widened(spec6)


@pytest.fixture(scope="session")
def wide_F6(wide_spec6):
    return free_energy(closed_form_Z(wide_spec6))
