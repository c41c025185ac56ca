import os

import pytest

from config import reset_rng
from numberfield import RATIONALS, NumberField, gaussian_field, real_quadratic_field

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture(autouse=True)
def seeded_rng():
    """Every test starts from the same generator state."""
    return reset_rng(0)


@pytest.fixture
def qq():
    return RATIONALS


@pytest.fixture
def qi():
    return gaussian_field()


@pytest.fixture
def q_sqrt2():
    return real_quadratic_field(2)


@pytest.fixture
def q_omega():
    """Q(omega) with omega = exp(2 pi i / 3)."""
    return NumberField([1, 1, 1], complex(-0.5, 0.866))
