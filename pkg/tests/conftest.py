# pylint: disable=unused-argument
import logging
import pathlib

import numpy as np
import pytest

from graph_willmore.common.grid import DiscreteDomain
from graph_willmore.geometry.boundary import BoundaryCurve, BoundaryData

TEST_DATA = pathlib.Path(__file__).parent / "test_data"


def pytest_sessionstart(session):
    """
    Pytest hook; prints the numerical stack versions.
    :param session: a pytest Session object
    :type session: :py:class:`pytest.Session`
    """
    import scipy  # pylint: disable=import-outside-toplevel

    print(f"numpy {np.__version__}, scipy {scipy.__version__}")


@pytest.fixture
def test_data():
    """Directory of the sample configuration files."""
    return TEST_DATA


@pytest.fixture(scope="module")
def unit_disk():
    """Cartesian unit disk, h = 1/32."""
    domain = DiscreteDomain.disk(radius=1.0, h=1.0 / 32)
    logging.info("unit disk: %s", domain.stencil_report())
    return domain


@pytest.fixture(scope="module")
def polar_disk():
    """Polar unit disk, h = 1/32."""
    return DiscreteDomain.disk(radius=1.0, h=1.0 / 32, mode="polar")


@pytest.fixture(scope="module")
def unit_square():
    return DiscreteDomain.rectangle(width=1.0, height=1.0, h=1.0 / 16)


@pytest.fixture(scope="module")
def annulus():
    return DiscreteDomain.annulus(inner_radius=0.5, radius=1.0, h=1.0 / 32)


@pytest.fixture(scope="module")
def unit_circle(unit_disk):
    return BoundaryCurve.from_domain(unit_disk)


@pytest.fixture
def sphere_cap_data():
    """Upper hemisphere of radius 2 over the unit disk."""
    return BoundaryData("sphere_cap", sphere_radius=2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
