# pylint: disable=redefined-outer-name
# -*- coding: utf-8 -*-
"""
Unit tests of the analytic example fields, their divergence tables and the
smooth reference corpus.
"""
import logging
import math

import numpy as np
import pytest

from graph_willmore.corpus import (
    EXAMPLES,
    CapInterpolant,
    LogLogLinear,
    RadialK,
    SqrtLog,
    build_example,
    derivative_agreement,
    divergence_diagnostics,
    l1_to_target,
    make_example,
    mollified_sequence,
    random_smooth_fields,
    sequence_sigma,
    smooth_corpus,
)
from graph_willmore.errors import ParameterError, ResolutionError
from graph_willmore.geometry.boundary import BoundaryCurve, sample_nodal

module_logger = logging.getLogger(__name__)

STEP = 1e-6

NEAR_ORIGIN = [(0.12, 0.08), (0.3, -0.2), (-0.1, 0.4)]
AROUND_CIRCLE = [(0.6, 0.2), (1.1, 0.5), (-0.4, -1.3), (0.72, 0.72)]


@pytest.mark.parametrize("example_id", EXAMPLES)
def test_make_example(example_id):
    assert make_example(example_id).example_id == example_id


def test_unknown_example():
    with pytest.raises(ParameterError, match="unknown example"):
        make_example("catenoid")


@pytest.mark.parametrize(
    "params, message",
    [
        ({"k": 4}, "odd integer"),
        ({"k": 1}, "odd integer"),
        ({"jump": -1.0}, "nonnegative"),
    ],
)
def test_radial_parameters_are_validated(params, message):
    with pytest.raises(ParameterError, match=message):
        RadialK(**params)


def _check_derivatives(example, points):
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    u, ux, uy, uxx, uxy, uyy = example.derivatives(x, y)
    scale = 1e-5 * (1.0 + np.abs(u) + np.abs(ux) + np.abs(uy))

    def central(func, dx, dy):
        return (func(x + dx, y + dy) - func(x - dx, y - dy)) / (2 * STEP)

    gx = central(example.value, STEP, 0.0)
    gy = central(example.value, 0.0, STEP)
    assert np.all(np.abs(gx - ux) < scale)
    assert np.all(np.abs(gy - uy) < scale)

    def grad_x(px, py):
        return example.gradient(px, py)[0]

    def grad_y(px, py):
        return example.gradient(px, py)[1]

    curvature_scale = 1e-5 * (1.0 + np.abs(uxx) + np.abs(uxy) + np.abs(uyy))
    assert np.all(np.abs(central(grad_x, STEP, 0.0) - uxx) < curvature_scale)
    assert np.all(np.abs(central(grad_x, 0.0, STEP) - uxy) < curvature_scale)
    assert np.all(np.abs(central(grad_y, 0.0, STEP) - uyy) < curvature_scale)


@pytest.mark.parametrize(
    "example",
    [LogLogLinear(0.5), SqrtLog(1.0), LogLogLinear(0.5, sigma=0.05)],
    ids=["logloglinear", "sqrtlog", "logloglinear-smoothed"],
)
def test_near_origin_derivatives(example):
    _check_derivatives(example, NEAR_ORIGIN)


@pytest.mark.parametrize(
    "example",
    [RadialK(3), RadialK(5), RadialK(3, jump=1.0, sigma=0.2)],
    ids=["k3", "k5", "cylinder-tilted"],
)
def test_radial_derivatives(example):
    _check_derivatives(example, AROUND_CIRCLE)


def test_logloglinear_closed_form():
    example = LogLogLinear(0.5)
    x, y = 0.1, 0.05
    expected = 0.5 * x * math.log(-math.log(math.hypot(x, y)))
    assert example.value(x, y) == pytest.approx(expected, rel=1e-12)
    # outside the cutoff the field vanishes
    assert example.value(0.8, 0.1) == 0.0


def test_radial_levels():
    example = RadialK(3, jump=1.0)
    assert example.level == 1.5
    assert example.value(0.2, 0.1) == pytest.approx(1.5)
    assert example.value(1.9, 0.0) == pytest.approx(-1.5)
    assert example.boundary_data().value(2.0, 0.0) == -1.5


def test_tilted_profiles_have_finite_slope():
    assert RadialK(3).max_slope() == math.inf
    tilted = RadialK(3, sigma=0.1)
    slope = tilted.max_slope()
    module_logger.info("max slope at tilt %.3f: %.3f", tilted.tilt, slope)
    assert math.isfinite(slope)
    assert slope >= 1.0 / tilted.tilt - 1e-6


def test_approximants_end_in_caps():
    assert isinstance(LogLogLinear(1.0).approximant(0.6), CapInterpolant)
    cap = RadialK(3, jump=1.0).approximant(5.0)
    assert isinstance(cap, CapInterpolant)
    assert cap.level == -1.5
    assert LogLogLinear(1.0).approximant(0.1).sigma == 0.1


def test_jump_flags():
    domain = RadialK(3).domain(1.0 / 16)
    flags = RadialK(3, jump=1.0).jump_flags(domain, 0.1)
    assert flags.any()
    assert not np.any(flags & ~domain.available)


def test_build_example():
    example = SqrtLog(1.0)
    domain = example.domain(1.0 / 16)
    build = build_example("sqrtlog", domain)
    assert isinstance(build.example, SqrtLog)
    assert np.array_equal(build.field.values, example.field(domain).values)


def test_sqrtlog_divergence_table():
    example = SqrtLog(1.0)
    domain = example.domain(1.0 / 32)
    table = divergence_diagnostics(
        example, [0.4, 0.2, 0.15], domain, exponents=(1.0, 2.0), oracle=True
    )
    module_logger.info("sqrtlog rows: %s", table.rows)
    hess2 = table.column("hess2")
    assert np.all(np.diff(hess2) > 0.0)
    assert table.rows[0]["hess2"] == pytest.approx(
        table.rows[0]["oracle_hess2"], rel=5e-2
    )
    assert table.rows[0]["w0"] == pytest.approx(
        table.rows[0]["oracle_w0"], rel=5e-2
    )
    assert table.exponents == (1.0, 2.0)
    assert "grad_p2" in table.rows[0]
    assert table.rows[0]["hess_error"] < 10.0 * domain.h**2


def test_divergence_schedule_is_validated():
    example = SqrtLog(1.0)
    domain = example.domain(1.0 / 32)
    with pytest.raises(ParameterError, match="decrease strictly"):
        divergence_diagnostics(example, [0.2, 0.4], domain)
    with pytest.raises(ResolutionError, match="below 4 grid steps"):
        divergence_diagnostics(example, [0.4, 0.05], domain)


@pytest.mark.parametrize("resolution", [32, 64])
def test_sqrtlog_derivatives_agree_off_the_origin(resolution):
    domain = SqrtLog(1.0).domain(1.0 / resolution)
    grad_error, hess_error = derivative_agreement(SqrtLog(1.0), domain, 0.4)
    assert grad_error < 10.0 * domain.h**2
    assert hess_error < 10.0 * domain.h**2


def test_derivative_agreement_converges_at_second_order():
    example = SqrtLog(1.0)
    coarse = derivative_agreement(example, example.domain(1.0 / 32), 0.4)
    fine = derivative_agreement(example, example.domain(1.0 / 64), 0.4)
    assert fine[0] < coarse[0] / 2.5
    assert fine[1] < coarse[1] / 2.5


def test_derivative_agreement_on_an_empty_region():
    example = SqrtLog(1.0)
    grad_error, hess_error = derivative_agreement(
        example, example.domain(1.0 / 16), 0.9
    )
    assert math.isnan(grad_error) and math.isnan(hess_error)


def test_closed_form_values():
    loglog_point = math.exp(-math.e)
    loglog_value = float(LogLogLinear(1.0).value(loglog_point, 0.0))
    assert loglog_value == pytest.approx(loglog_point, rel=1e-12)
    assert float(RadialK(3).value(0.875, 0.0)) == pytest.approx(0.5, rel=1e-12)
    pure = SqrtLog(1.0).pure()
    parts = pure.derivatives(math.exp(-1.0), 0.0)[:3]
    u, ux, uy = (float(part) for part in parts)
    assert u == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert ux == pytest.approx(0.5, rel=1e-12)
    assert uy == pytest.approx(0.0, abs=1e-15)


def test_regularised_profile_matches_far_from_the_origin():
    example = SqrtLog(1.0)
    smooth = example.approximant(1e-3)
    x, y = np.array([0.2, 0.3]), np.array([0.1, -0.2])
    assert np.allclose(smooth.value(x, y), example.value(x, y), rtol=1e-4)
    assert np.all(np.isfinite(smooth.derivatives(0.0, 0.0)))


def test_sequence_scales():
    assert sequence_sigma(0.4, 2) == pytest.approx(0.1)
    with pytest.raises(ParameterError):
        sequence_sigma(0.4, 0)


def test_mollified_sequence():
    target = SqrtLog(1.0)
    domain = target.domain(1.0 / 32)
    member = mollified_sequence(target, 1, domain, sigma0=0.4)
    member.check_finite()
    assert l1_to_target(member, target.approximant(0.2)) == 0.0
    with pytest.raises(ResolutionError):
        mollified_sequence(target, 4, domain, sigma0=0.4)


def test_smooth_corpus(polar_disk):
    corpus = smooth_corpus(polar_disk, seed=3)
    assert [entry.name for entry in corpus] == [
        "zero",
        "affine",
        "sphere_cap",
        "parabolic",
        "fourier",
    ]
    curve = BoundaryCurve.from_domain(polar_disk)
    for entry in corpus:
        entry.field.check_finite()
        if entry.data is None:
            continue
        on_boundary = sample_nodal(entry.field.values, polar_disk, curve)
        expected = entry.data.value(curve.points[:, 0], curve.points[:, 1])
        assert np.allclose(on_boundary, expected, atol=1e-12), entry.name


def test_random_fields_are_seeded(unit_square):
    first = random_smooth_fields(unit_square, 2, seed=7)
    again = random_smooth_fields(unit_square, 2, seed=7)
    assert np.array_equal(first[0].values, again[0].values)
    assert not np.array_equal(first[0].values, first[1].values)
