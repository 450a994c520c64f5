import pytest

from cayleywalk import _kernels
from cayleywalk.group_words import Presentation


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile (or load from cache) every jitted kernel before any timed test
    _kernels.warm_up()


@pytest.fixture(scope="session")
def p3():
    return Presentation(0, 3)


@pytest.fixture(scope="session")
def p3_mixed():
    return Presentation(1, 1)


@pytest.fixture(scope="session")
def p4():
    return Presentation(2, 0)
