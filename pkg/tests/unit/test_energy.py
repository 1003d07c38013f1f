# pylint: disable=redefined-outer-name
# -*- coding: utf-8 -*-
"""
Unit tests of the Willmore and Helfrich energies, the boundary-controlled
bounds and the boundary forms of the total Gauss curvature.
"""
import logging
import math
import warnings

import numpy as np
import pytest

from graph_willmore.common.grid import DiscreteDomain, ScalarField
from graph_willmore.corpus import random_smooth_field
from graph_willmore.errors import PreconditionError
from graph_willmore.functionals.energy import (
    apriori_ensemble,
    bound_certificates,
    gamma_sweep,
    gauss_energy_boundary_form,
    gauss_energy_EG,
    helfrich,
    integration_by_parts_residual,
    physical_range,
    willmore,
    willmore_absolutely_continuous,
)
from graph_willmore.geometry.boundary import (
    BoundaryCurve,
    BoundaryData,
    total_gauss_curvature,
    trace_field,
)
from graph_willmore.geometry.graphgeom import geometry_bundle

module_logger = logging.getLogger(__name__)

CAP_AREA = 4.0 * math.pi * (2.0 - math.sqrt(3.0))
CAP_GAUSS = math.pi * (2.0 - math.sqrt(3.0))


@pytest.fixture(scope="module")
def cap(polar_disk):
    """Hemisphere of radius 2 over the polar unit disk."""
    return BoundaryData("sphere_cap", sphere_radius=2.0).field(polar_disk)


@pytest.fixture(scope="module")
def polar_circle(polar_disk):
    return BoundaryCurve.from_domain(polar_disk)


def _wavy(domain):
    return ScalarField.from_function(
        domain, lambda x, y: 0.3 * np.sin(2.0 * x) * np.cos(y) + 0.2 * x * y
    )


def test_flat_energies(polar_disk):
    report = willmore(ScalarField.constant(polar_disk, 0.0), gamma=0.5)
    assert report.area == pytest.approx(math.pi, rel=1e-12)
    assert report.w0 == 0.0
    assert report.total_gauss == 0.0
    assert report.w_gamma == 0.0
    assert report.apriori_ratio == pytest.approx(math.pi, rel=1e-12)


def test_sphere_cap_energies(cap):
    report = willmore(cap, gamma=1.0)
    module_logger.info("sphere cap energies: %s", report)
    assert report.area == pytest.approx(CAP_AREA, rel=1e-2)
    assert report.w0 == pytest.approx(CAP_AREA / 4.0, rel=1e-2)
    assert report.total_gauss == pytest.approx(CAP_GAUSS, rel=1e-2)
    assert abs(report.w_gamma) < 2e-2
    assert report.sup_u == cap.max_abs()
    assert report.helfrich is None


def test_willmore_integrand_is_nonnegative(unit_disk):
    report = willmore(_wavy(unit_disk), gamma=1.0)
    assert report.integrand_min >= -1e-10


@pytest.mark.parametrize(
    "alpha, h0, gamma, expected",
    [
        (0.0, 0.0, 0.0, True),
        (1.0, 2.0, 0.5, True),
        (1.0, 2.0, 0.9, False),
        (-1.0, 0.0, 0.0, False),
        (1.0, 0.0, 1.5, False),
    ],
)
def test_physical_range(alpha, h0, gamma, expected):
    assert physical_range(alpha, h0, gamma) is expected


def test_helfrich_with_matching_spontaneous_curvature(cap):
    value = helfrich(cap, alpha=1.0, h0=-1.0)
    assert value.physical
    assert value.value == pytest.approx(CAP_AREA, rel=1e-2)
    assert abs(value.integrand_min - 1.0) < 1e-2


def test_helfrich_reduces_to_willmore(cap):
    report = willmore(cap, gamma=0.3, alpha=0.0)
    assert report.helfrich.value == pytest.approx(report.w_gamma, rel=1e-12)


def test_helfrich_flags_unphysical_parameters(cap):
    value = helfrich(cap, alpha=0.0, h0=1.0, gamma=0.5)
    assert not value.physical


def test_sphere_cap_certificates(cap, polar_circle, polar_disk):
    data = BoundaryData("sphere_cap", sphere_radius=2.0)
    certificates = bound_certificates(cap, polar_circle, data, gamma=1.0)
    module_logger.info("margins: %s", certificates.margins)
    assert certificates.chi == 1
    assert certificates.phi_norm == pytest.approx(
        2.0 * math.pi * math.sqrt(3.0), rel=1e-6
    )
    assert certificates.kappa_norm == pytest.approx(2.0 * math.pi)
    assert certificates.holds(10.0 * polar_disk.h)
    assert certificates.ah_gap < 1e-8 * (1.0 + certificates.ah_reference)
    assert set(certificates.as_dict()["margins"]) == {
        "kbound",
        "abound",
        "gamma_gap",
        "relaxation",
        "bv",
    }


def test_certificates_reject_foreign_data(cap, polar_circle):
    with pytest.raises(PreconditionError, match="trace mismatch"):
        bound_certificates(cap, polar_circle, BoundaryData("zero"))


def test_gauss_energy_boundary_forms(cap, polar_circle):
    trace = trace_field(cap, polar_circle)
    boundary_form = gauss_energy_boundary_form(trace, polar_circle, 1)
    extension_form = gauss_energy_EG(cap, polar_circle, trace=trace)
    assert boundary_form == pytest.approx(CAP_GAUSS, abs=1e-2)
    assert extension_form == pytest.approx(CAP_GAUSS, abs=1e-2)


def test_gauss_energy_alpha_trace_mismatch(cap, polar_circle):
    trace = trace_field(cap, polar_circle)
    with pytest.raises(PreconditionError, match="alpha trace mismatch"):
        gauss_energy_EG(
            cap, polar_circle, trace=trace, alpha=lambda x, y: 1.0 + 0 * x
        )


def test_integration_by_parts(cap, polar_circle, polar_disk):
    trace = trace_field(cap, polar_circle)
    residual = integration_by_parts_residual(
        geometry_bundle(cap), trace, polar_circle
    )
    module_logger.info("integration by parts residual %.3e", residual)
    assert residual < 10.0 * polar_disk.h * (1.0 + cap.max_abs())


def test_absolutely_continuous_without_flags(cap):
    assert willmore_absolutely_continuous(cap) == pytest.approx(
        willmore(cap).w0, rel=1e-12
    )


def test_jump_flags_are_validated(cap, polar_disk):
    with pytest.raises(PreconditionError, match="boolean mask"):
        willmore_absolutely_continuous(
            cap, np.zeros(polar_disk.shape, dtype=int)
        )
    with pytest.raises(PreconditionError, match="whole domain"):
        willmore_absolutely_continuous(cap, polar_disk.available.copy())


def test_gamma_sweep_is_affine(cap):
    rows = gamma_sweep(cap, [0.0, 0.5, 1.0])
    assert [row["gamma"] for row in rows] == [0.0, 0.5, 1.0]
    assert rows[0]["w_gamma"] == rows[0]["w0"]
    assert rows[1]["w_gamma"] == pytest.approx(
        0.5 * (rows[0]["w_gamma"] + rows[2]["w_gamma"]), rel=1e-12
    )


def test_apriori_ensemble(unit_disk):
    fields = [ScalarField.constant(unit_disk, 0.0), _wavy(unit_disk)]
    ratios = apriori_ensemble(fields)
    assert ratios.shape == (2,)
    assert np.all(ratios > 0.0)
    assert ratios[0] == pytest.approx(unit_disk.area)


def test_abound_is_tight_for_the_flat_disk(unit_disk, unit_circle):
    u = ScalarField.constant(unit_disk, 0.0)
    certificates = bound_certificates(u, unit_circle, BoundaryData("zero"))
    assert abs(certificates.margins["abound"]) < 1e-6


@pytest.mark.parametrize("resolution", [16, 32])
def test_abound_holds_on_a_random_cartesian_field(resolution):
    domain = DiscreteDomain.disk(radius=1.0, h=1.0 / resolution)
    u = random_smooth_field(domain, np.random.default_rng(3))
    curve = BoundaryCurve.from_domain(domain)
    certificates = bound_certificates(u, curve, BoundaryData("zero"))
    module_logger.info("1/h=%d margins: %s", resolution, certificates.margins)
    assert certificates.margins["abound"] >= -10.0 * domain.h
    assert certificates.holds(10.0 * domain.h)


def test_gauss_energy_of_sine_data():
    domain = DiscreteDomain.disk(radius=1.0, h=1.0 / 64, mode="polar")
    data = BoundaryData("sine", amplitude=0.2, frequency=3)
    u = data.field(domain)
    curve = BoundaryCurve.from_domain(domain)
    trace = trace_field(u, curve, data)
    total = total_gauss_curvature(geometry_bundle(u))
    narrow = gauss_energy_EG(u, curve, trace=trace, collar_fraction=0.1)
    wide = gauss_energy_EG(u, curve, trace=trace, collar_fraction=0.4)
    module_logger.info("int KQ %.6f, E_G %.6f / %.6f", total, narrow, wide)
    assert total < -1.0
    assert narrow == pytest.approx(total, abs=domain.h)
    assert wide == pytest.approx(total, abs=domain.h)
    assert wide == pytest.approx(narrow, abs=domain.h)


def test_exterior_nodes_raise_no_warnings(unit_disk, unit_circle):
    u = _wavy(unit_disk)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        bundle = geometry_bundle(u)
        willmore(u, gamma=1.0, bundle=bundle)
        total_gauss_curvature(bundle)
        bound_certificates(u, unit_circle, None, 1.0, bundle)


@pytest.mark.slow
def test_sphere_cap_converges_at_second_order():
    exact = 2.0 * math.pi * (1.0 - math.sqrt(3.0) / 2.0)
    data = BoundaryData("sphere_cap", sphere_radius=1.0)
    errors = []
    for resolution in (64, 128, 256):
        domain = DiscreteDomain.disk(
            radius=0.5, h=1.0 / resolution, mode="polar"
        )
        errors.append(abs(willmore(data.field(domain)).w0 - exact))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    module_logger.info("sphere cap errors %s, orders %s", errors, orders)
    assert errors[-1] < 1e-2 * exact
    assert np.all(orders >= 1.8)
