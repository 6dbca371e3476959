import pytest

from kltcyl.manifold import sphere_spec
from kltcyl.params import make_params


@pytest.fixture
def p22():
    """d = 2, q = 2 (p = 4): the cylinder R x S^1 with cubic nonlinearity."""
    return make_params(2, 2.0)


@pytest.fixture
def circle():
    return sphere_spec(2)


@pytest.fixture
def s2():
    return sphere_spec(3)
