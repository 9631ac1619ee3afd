import numpy as np
import pytest

from fkgompertz import assemble_structure, build_basis


@pytest.fixture(scope="session")
def basis6():
    return build_basis(6, 1.0)


@pytest.fixture(scope="session")
def system6(basis6):
    return assemble_structure(basis6)


@pytest.fixture(scope="session")
def basis1():
    return build_basis(1, 1.0)


@pytest.fixture(scope="session")
def system1(basis1):
    return assemble_structure(basis1)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
