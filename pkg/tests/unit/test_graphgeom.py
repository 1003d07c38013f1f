# pylint: disable=redefined-outer-name
# -*- coding: utf-8 -*-
"""
Unit tests of the pointwise graph geometry.
"""
import logging

import numpy as np
import pytest

from graph_willmore.common.grid import DiscreteDomain, ScalarField
from graph_willmore.corpus import random_smooth_field
from graph_willmore.geometry.graphgeom import (
    divergence_form_curvature,
    geometry_bundle,
    hessian_bound_check,
)

module_logger = logging.getLogger(__name__)


@pytest.fixture(scope="module")
def cap_bundle(unit_disk):
    u = ScalarField.from_function(
        unit_disk, lambda x, y: np.sqrt(4.0 - x**2 - y**2)
    )
    return geometry_bundle(u)


def test_flat_field_has_no_curvature(unit_disk):
    bundle = geometry_bundle(ScalarField.constant(unit_disk, 0.7))
    assert bundle.H.max_abs() < 1e-10
    assert bundle.H_div.max_abs() < 1e-10
    assert bundle.K.max_abs() < 1e-16
    assert np.all(bundle.Q.node_values() == 1.0)


def test_affine_field(unit_disk):
    u = ScalarField.from_function(unit_disk, lambda x, y: 0.3 * x - 0.4 * y)
    bundle = geometry_bundle(u)
    assert np.allclose(bundle.Q.node_values(), np.sqrt(1.25))
    assert bundle.H.max_abs() < 1e-10
    assert bundle.H_div.max_abs() < 1e-10
    assert bundle.A2.max_abs() < 1e-16


def test_sphere_cap_curvatures(cap_bundle):
    region = cap_bundle.domain.interior_depth(2)
    assert np.max(np.abs(cap_bundle.H.node_values(region) + 1.0)) < 1e-2
    assert np.max(np.abs(cap_bundle.H_div.node_values(region) + 1.0)) < 1e-2
    assert np.max(np.abs(cap_bundle.K.node_values(region) - 0.25)) < 1e-2
    assert np.max(np.abs(cap_bundle.A2.node_values(region) - 0.5)) < 2e-2
    assert cap_bundle.h_discrepancy < 0.1


def test_band_nodes_use_the_pointwise_curvature(cap_bundle):
    domain = cap_bundle.domain
    band = domain.available & ~domain.interior
    assert band.any()
    assert np.array_equal(
        cap_bundle.H_div.values[band], cap_bundle.H.values[band]
    )
    assert cap_bundle.h_discrepancy < 200.0 * domain.h**2


def test_band_rule_on_a_random_field(unit_disk):
    u = random_smooth_field(unit_disk, np.random.default_rng(3))
    bundle = geometry_bundle(u)
    band = unit_disk.available & ~unit_disk.interior
    assert np.array_equal(bundle.H_div.values[band], bundle.H.values[band])
    assert bundle.h_discrepancy < 200.0 * unit_disk.h**2


def test_divergence_form_converges():
    errors = []
    for h in (1.0 / 16, 1.0 / 32):
        domain = DiscreteDomain.disk(radius=1.0, h=h)
        u = ScalarField.from_function(
            domain, lambda x, y: np.sqrt(4.0 - x**2 - y**2)
        )
        h_div = divergence_form_curvature(u)
        inner = domain.available & (np.hypot(domain.x, domain.y) < 0.7)
        errors.append(np.max(np.abs(h_div.values[inner] + 1.0)))
    module_logger.info("divergence-form H errors %s", errors)
    assert errors[1] < errors[0] / 3.0


def test_shape_operator_trace_is_mean_curvature(cap_bundle):
    a, b, c, d = cap_bundle.shape_operator()
    mask = cap_bundle.domain.available
    trace = (a + d)[mask]
    assert np.allclose(trace, cap_bundle.H.values[mask])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_hessian_chain_holds(unit_disk, seed):
    rng = np.random.default_rng(seed)
    u = random_smooth_field(unit_disk, rng, amplitude=1.0)
    report = hessian_bound_check(u)
    assert report.violations == 0
    assert report.max_relative_violation <= report.tolerance + 1e-12


def test_rows_cover_available_nodes(unit_square):
    bundle = geometry_bundle(ScalarField.constant(unit_square, 0.0))
    rows = list(bundle.rows())
    assert len(rows) == int(unit_square.available.sum())
    assert {"x", "y", "H", "H_div", "K", "A2"} <= set(rows[0])
