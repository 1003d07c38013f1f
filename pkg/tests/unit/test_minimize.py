# pylint: disable=redefined-outer-name
# -*- coding: utf-8 -*-
"""
Unit tests of the nodal descent: configuration checks, constraint masks,
the coloured energy gradient and complete descent runs.
"""
import logging
import math
import time
import warnings

import numpy as np
import pytest

from graph_willmore.common.grid import (
    DiscreteDomain,
    ScalarField,
    gradient,
    hessian,
)
from graph_willmore.corpus import random_smooth_field
from graph_willmore.errors import (
    ConfigurationError,
    ParameterError,
    PreconditionError,
    StagnationError,
)
from graph_willmore.functionals.energy import willmore
from graph_willmore.geometry.boundary import BoundaryData
from graph_willmore.minimize import (
    OPERATORS,
    TRACE_COLUMNS,
    MinimizeConfig,
    MinimizeStatus,
    Minimizer,
    constraint_mask,
    discrete_energy_gradient,
    minimize,
    navier_residual,
    residual_region,
    willmore_residual,
)

module_logger = logging.getLogger(__name__)


@pytest.fixture(scope="module")
def coarse_disk():
    return DiscreteDomain.disk(radius=1.0, h=1.0 / 8)


@pytest.fixture(scope="module")
def affine_data():
    return BoundaryData("affine", slope_x=0.2, slope_y=-0.1, offset=0.05)


@pytest.mark.parametrize(
    "params, error",
    [
        ({"mode": "clamped"}, ConfigurationError),
        ({"difference": "backward"}, ConfigurationError),
        ({"initial": "random"}, ConfigurationError),
        ({"backtrack": 1.5}, ParameterError),
        ({"armijo": 0.0}, ParameterError),
        ({"max_iterations": 0}, ParameterError),
    ],
)
def test_config_validation(params, error):
    with pytest.raises(error) as raised:
        MinimizeConfig(**params)
    assert raised.value.section == "minimize"
    assert raised.value.key == next(iter(params))


def test_polar_grids_are_rejected(polar_disk):
    with pytest.raises(ConfigurationError, match="cartesian grid"):
        Minimizer(polar_disk, BoundaryData(), MinimizeConfig())


def test_constraint_masks(coarse_disk):
    hinged = constraint_mask(coarse_disk, "navier")
    clamped = constraint_mask(coarse_disk, "dirichlet")
    assert np.array_equal(hinged, coarse_disk.boundary_adjacent)
    assert np.all(clamped[hinged])
    assert clamped.sum() > hinged.sum()
    assert not np.any(clamped & ~coarse_disk.available)
    with pytest.raises(ConfigurationError, match="unknown minimize mode"):
        constraint_mask(coarse_disk, "free")


@pytest.mark.parametrize(
    "difference, tolerance", [("central", 1e-6), ("forward", 1e-3)]
)
def test_coloured_gradient_matches_nodewise_differences(
    unit_square, affine_data, difference, tolerance
):
    config = MinimizeConfig(
        mode="navier", gamma=0.5, alpha=0.2, h0=0.3, difference=difference
    )
    minimizer = Minimizer(unit_square, affine_data, config)
    values = minimizer.initial_values()
    grad, oracle, error = minimizer.check_gradient(values)
    module_logger.info("%s gradient relative error %.3e", difference, error)
    assert error < tolerance
    assert np.all(grad[minimizer.frozen] == 0.0)
    assert np.max(np.abs(oracle)) > 0.0


def test_sparse_operators_reproduce_the_grid_derivatives(unit_disk, rng):
    minimizer = Minimizer(unit_disk, BoundaryData(), MinimizeConfig())
    u = random_smooth_field(unit_disk, rng, amplitude=1.0)
    grad, hess = gradient(u), hessian(u)
    expected = (grad.x, grad.y, hess.xx, hess.xy, hess.yy)
    mask = unit_disk.available
    operators = minimizer._operators  # pylint: disable=protected-access
    for name, reference in zip(OPERATORS, expected):
        image = (operators[name] @ u.values.ravel()).reshape(unit_disk.shape)
        assert np.allclose(image[mask], reference[mask], rtol=1e-12, atol=1e-9)


def test_gradient_vanishes_at_the_flat_graph(unit_square):
    u = ScalarField.constant(unit_square, 0.0)
    config = MinimizeConfig(alpha=1.0, gamma=0.3)
    grad = discrete_energy_gradient(u, config)
    assert np.max(np.abs(grad.values)) < 1e-14


def test_gradient_requires_the_boundary_condition(unit_square):
    u = ScalarField.constant(unit_square, 1.0)
    with pytest.raises(PreconditionError, match="boundary condition"):
        discrete_energy_gradient(u, MinimizeConfig())


@pytest.mark.slow
def test_descent_flattens_a_bump(coarse_disk, mocker):
    config = MinimizeConfig(max_iterations=30)
    minimizer = Minimizer(coarse_disk, BoundaryData(), config)
    callback = mocker.Mock()
    field, trace = minimizer.run(task_callback=callback)
    module_logger.info(
        "%s after %d steps: %.3e -> %.3e",
        trace.status,
        len(trace) - 1,
        trace.energies[0],
        trace.final_energy,
    )
    assert trace.rows[0]["iteration"] == 0
    assert len(trace) >= 2
    assert trace.is_monotone()
    assert trace.final_energy < 0.5 * trace.energies[0]
    assert set(trace.rows[-1]) == set(TRACE_COLUMNS)
    assert math.isnan(trace.rows[-1]["navier_residual"])
    assert np.all(field.values[minimizer.frozen] == 0.0)
    callback.assert_any_call(progress=1)
    callback.assert_called_with(status=trace.status)


def test_navier_descent_records_boundary_residuals(coarse_disk):
    config = MinimizeConfig(mode="navier", max_iterations=3)
    _, trace = Minimizer(coarse_disk, BoundaryData(), config).run()
    assert np.all(np.isfinite(trace.column("navier_residual")))
    assert trace.is_monotone()


def test_abort_stops_before_the_first_step(coarse_disk, mocker):
    minimizer = Minimizer(coarse_disk, BoundaryData(), MinimizeConfig())
    minimizer.abort()
    callback = mocker.Mock()
    _, trace = minimizer.run(task_callback=callback)
    assert trace.status is MinimizeStatus.ABORTED
    assert len(trace) == 1
    callback.assert_called_once_with(status=MinimizeStatus.ABORTED)


def test_line_search_stagnation(coarse_disk):
    config = MinimizeConfig(alpha=1.0, initial_step=1e6, max_failures=1)
    minimizer = Minimizer(coarse_disk, BoundaryData(), config)
    with pytest.raises(StagnationError) as raised:
        minimizer.run()
    assert raised.value.diagnostics["failures"] == 1
    assert raised.value.diagnostics["iteration"] == 1


def test_custom_initial_fields(coarse_disk, affine_data):
    minimizer = Minimizer(
        coarse_disk, affine_data, MinimizeConfig(initial="custom")
    )
    with pytest.raises(ConfigurationError, match="needs an initial field"):
        minimizer.initial_values()
    shifted = affine_data.field(coarse_disk).values + 1.0
    with pytest.raises(PreconditionError, match="boundary condition"):
        minimizer.initial_values(shifted)
    phi = affine_data.field(coarse_disk)
    assert np.array_equal(minimizer.initial_values(phi), phi.values)


def test_initial_fields_respect_the_constraints(coarse_disk, affine_data):
    for initial in ("phi-extension", "zero", "bump"):
        config = MinimizeConfig(initial=initial, seed=4)
        minimizer = Minimizer(coarse_disk, affine_data, config)
        for start in (0, 1):
            minimizer.check_constraints(minimizer.initial_values(start=start))


@pytest.mark.slow
def test_multistart_keeps_the_lowest_energy(coarse_disk):
    config = MinimizeConfig(max_iterations=4, starts=2, seed=11)
    field, trace = minimize(coarse_disk, BoundaryData(), config, workers=2)
    assert [entry["start"] for entry in trace.starts] == [0, 1]
    assert trace.final_energy == min(entry["energy"] for entry in trace.starts)
    assert field.domain is coarse_disk


def test_willmore_residual_of_affine_fields(unit_disk, affine_data):
    residual = willmore_residual(affine_data.field(unit_disk))
    assert residual.max_abs(residual_region(unit_disk)) < 1e-8


def test_willmore_residual_of_the_sphere(unit_disk, sphere_cap_data):
    residual = willmore_residual(sphere_cap_data.field(unit_disk))
    worst = residual.max_abs(residual_region(unit_disk))
    module_logger.info("sphere Willmore residual %.3e", worst)
    assert worst < 0.1


def test_navier_residual_of_the_flat_graph(unit_disk):
    u = ScalarField.constant(unit_disk, 0.0)
    assert np.max(navier_residual(u, 0.0)) == 0.0
    assert np.max(navier_residual(u, 0.5, data=BoundaryData())) == 0.0


@pytest.mark.slow
def test_dirichlet_descent_on_a_fine_disk():
    domain = DiscreteDomain.disk(radius=1.0, h=1.0 / 128)
    started = time.perf_counter()
    field, trace = minimize(domain, BoundaryData(), MinimizeConfig())
    module_logger.info(
        "fine descent: %s after %d steps in %.1f s",
        trace.status,
        len(trace) - 1,
        time.perf_counter() - started,
    )
    assert field.max_abs() < 1e-3
    assert willmore(field).w0 < 1e-6
    residual = willmore_residual(field)
    assert residual.max_abs(residual_region(domain)) < 1e-2


def test_residual_ignores_exterior_nodes(unit_disk, sphere_cap_data):
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        residual = willmore_residual(sphere_cap_data.field(unit_disk))
    assert residual.is_finite()
