import numpy as np
import pytest

from gibbsmix.groups import build_cyclic, build_dihedral, build_hypercube


@pytest.fixture
def z4():
    return build_cyclic(4, [1, 3])


@pytest.fixture
def z6():
    return build_cyclic(6, [1, 5])


@pytest.fixture
def z6_complete():
    return build_cyclic(6, range(1, 6))


@pytest.fixture
def dihedral3():
    return build_dihedral(3)


@pytest.fixture
def cube3():
    return build_hypercube(3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
