# pylint: disable=redefined-outer-name
# -*- coding: utf-8 -*-
"""
Unit tests of the structured grids, the finite-difference operators and
the quadrature.
"""
import logging
import math

import numpy as np
import pytest

from graph_willmore.common.grid import (
    DiscreteDomain,
    NodeClass,
    ScalarField,
    gradient,
    h1_seminorm,
    hessian,
    integrate,
    l1_distance,
    shift_array,
)
from graph_willmore.errors import ConfigurationError, NumericalFailure

module_logger = logging.getLogger(__name__)


def quadratic(x, y):
    return 1.0 + 2.0 * x - y + 0.5 * x**2 + x * y - 0.25 * y**2


def test_shift_array_fills_and_wraps():
    values = np.arange(12.0).reshape(3, 4)
    shifted = shift_array(values, 0, 1, -1.0)
    assert np.array_equal(shifted[:2], values[1:])
    assert np.all(shifted[2] == -1.0)
    rolled = shift_array(values, 1, -1, 0.0, periodic=True)
    assert np.array_equal(rolled[:, 0], values[:, 3])


def test_rectangle_area_and_center(unit_square):
    assert unit_square.area == pytest.approx(1.0, abs=1e-12)
    assert unit_square.center == pytest.approx((0.5, 0.5))
    assert unit_square.euler_characteristic == 1
    assert unit_square.inradius == pytest.approx(0.5)


def test_cartesian_disk_area(unit_disk):
    assert unit_disk.area == pytest.approx(math.pi, abs=4.0 * unit_disk.h)
    assert unit_disk.analytic_area() == pytest.approx(math.pi)


def test_polar_disk_weights_are_exact(polar_disk):
    assert polar_disk.area == pytest.approx(math.pi, rel=1e-12)
    inner = polar_disk.radial_region(0.0, 0.5)
    assert float(np.sum(inner)) == pytest.approx(0.25 * math.pi, rel=1e-12)


def test_node_classes(unit_disk):
    classes = set(np.unique(unit_disk.node_class))
    assert classes == {
        NodeClass.EXTERIOR,
        NodeClass.BOUNDARY,
        NodeClass.INTERIOR,
    }
    assert not np.any(unit_disk.interior & unit_disk.boundary_adjacent)
    deep = unit_disk.interior_depth(2)
    assert np.all(unit_disk.interior[deep])
    assert deep.sum() < unit_disk.interior_depth(1).sum()


def test_gradient_and_hessian_exact_on_quadratics(unit_disk):
    u = ScalarField.from_function(unit_disk, quadratic)
    grad = gradient(u)
    hess = hessian(u)
    mask = unit_disk.available
    x, y = unit_disk.x[mask], unit_disk.y[mask]
    assert np.allclose(grad.x[mask], 2.0 + x + y, atol=1e-9)
    assert np.allclose(grad.y[mask], -1.0 + x - 0.5 * y, atol=1e-9)
    assert np.allclose(hess.xx[mask], 1.0, atol=1e-8)
    assert np.allclose(hess.xy[mask], 1.0, atol=1e-8)
    assert np.allclose(hess.yy[mask], -0.5, atol=1e-8)


def test_polar_gradient_is_second_order():
    errors = []
    for h in (1.0 / 16, 1.0 / 32):
        domain = DiscreteDomain.disk(radius=1.0, h=h, mode="polar")
        u = ScalarField.from_function(domain, lambda x, y: np.sin(x) * y)
        grad = gradient(u)
        mask = domain.available
        x, y = domain.x[mask], domain.y[mask]
        errors.append(np.max(np.abs(grad.x[mask] - np.cos(x) * y)))
    module_logger.info("polar gradient errors %s", errors)
    assert errors[1] < errors[0] / 3.0


def test_integrate_region_and_l1(unit_square):
    one = ScalarField.constant(unit_square, 1.0)
    assert integrate(one) == pytest.approx(1.0, abs=1e-12)
    half = unit_square.x <= 0.5 + 1e-12
    assert integrate(one, region=half) < 1.0
    two = ScalarField.constant(unit_square, 3.0)
    assert l1_distance(one, two) == pytest.approx(2.0, abs=1e-12)


def test_h1_seminorm_of_linear_field(unit_square):
    u = ScalarField.from_function(unit_square, lambda x, y: 3.0 * x + 4.0 * y)
    assert h1_seminorm(u) == pytest.approx(5.0, rel=1e-10)


def test_restrict_keeps_weights(unit_disk):
    removed = unit_disk.available & (np.abs(unit_disk.x) < 0.1)
    restricted = unit_disk.restrict(removed)
    assert not np.any(restricted.available & removed)
    kept = restricted.available
    assert np.array_equal(restricted.weights[kept], unit_disk.weights[kept])


def test_check_finite_raises():
    domain = DiscreteDomain.rectangle(h=0.25)
    values = np.zeros(domain.shape)
    values[2, 2] = np.nan
    with pytest.raises(NumericalFailure, match="non-finite"):
        ScalarField(domain, values).check_finite("u")


@pytest.mark.parametrize(
    "shape, kwargs, match",
    [
        ("hexagon", {}, "unknown domain shape"),
        ("rectangle", {"mode": "polar"}, "polar mode"),
        ("disk", {"mode": "spherical"}, "unknown grid mode"),
        ("disk", {"excision": 2.0}, "excision radius"),
        ("annulus", {"inner_radius": 1.5}, "inner radius"),
    ],
)
def test_invalid_domains(shape, kwargs, match):
    with pytest.raises(ConfigurationError, match=match):
        DiscreteDomain.build(shape, 1.0 / 16, **kwargs)


def test_negative_spacing_is_rejected():
    with pytest.raises(ConfigurationError, match="h must be positive"):
        DiscreteDomain.disk(h=-0.1)


def test_polar_needs_even_angle_count():
    with pytest.raises(ConfigurationError, match="n_theta"):
        DiscreteDomain.disk(h=1.0 / 8, mode="polar", n_theta=17)
