# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Pointwise differential geometry of the graph of a nodal function.

Conventions: ``Q = sqrt(1 + |grad u|^2)``, ``w = grad u / Q``, the metric
inverse is ``g^-1 = I - w w^T``, the second fundamental form is
``h = D^2 u / Q`` and ``H`` is the *sum* of the principal curvatures.
"""

from __future__ import annotations

import logging

import attrs
import numpy as np

from graph_willmore.common.grid import (
    ScalarField,
    TensorField,
    VectorField,
    cartesian_partials,
    divergence,
    gradient,
    hessian,
)

# pylint: disable=logging-fstring-interpolation

__all__ = [
    "GeometryBundle",
    "HessianBoundReport",
    "geometry_bundle",
    "hessian_bound_check",
    "divergence_form_curvature",
    "face_mean_curvature",
    "trace_mean_curvature",
]

logger = logging.getLogger(__name__)


@attrs.define(frozen=True, eq=False)
class GeometryBundle:
    """Nodal geometric quantities of ``graph(u)``."""

    u: ScalarField
    grad: VectorField
    hess: TensorField
    Q: ScalarField
    w: VectorField
    H: ScalarField
    H_div: ScalarField
    K: ScalarField
    K_dw: ScalarField
    A2: ScalarField
    g_inv: TensorField
    second_form: TensorField
    h_discrepancy: float
    k_discrepancy: float

    @property
    def domain(self):
        return self.u.domain

    @property
    def padded_q(self) -> np.ndarray:
        """``Q`` with exterior entries set to one, safe as a divisor."""
        return np.where(self.domain.available, self.Q.values, 1.0)

    def shape_operator(self) -> tuple:
        """Entries ``(a, b, c, d)`` of ``g^-1 h`` (equal to ``Dw``)."""
        return self.g_inv.matmul(self.second_form)

    def rows(self):
        """Per-node records for CSV dumps."""
        domain = self.domain
        mask = domain.available
        columns = {
            "x": domain.x,
            "y": domain.y,
            "node_class": domain.node_class,
            "u": self.u.values,
            "Q": self.Q.values,
            "H": self.H.values,
            "H_div": self.H_div.values,
            "K": self.K.values,
            "K_dw": self.K_dw.values,
            "A2": self.A2.values,
        }
        for index in zip(*np.nonzero(mask)):
            yield {name: array[index] for name, array in columns.items()}


def divergence_form_curvature(
    u: ScalarField,
    grad: VectorField | None = None,
    pointwise: ScalarField | None = None,
) -> ScalarField:
    """
    ``H = div(grad u / Q)``.

    On cartesian grids interior nodes use the conservative face stencil
    (fluxes at half-way points between neighbours). Cut-cell band nodes
    lack the face neighbours and take the pointwise value
    ``tr(g^-1 h) = div(grad u / Q)``. Polar grids use the composed
    differences of ``w`` everywhere.

    :param pointwise: the nodal ``tr(g^-1 h)``, computed when omitted
    """
    domain = u.domain
    grad = grad if grad is not None else gradient(u)
    if domain.mode != "cartesian":
        q_node = np.sqrt(1.0 + grad.x**2 + grad.y**2)
        composed = divergence(
            VectorField(domain, grad.x / q_node, grad.y / q_node)
        ).values
        return ScalarField.from_values(domain, composed)
    if pointwise is None:
        hess = hessian(u)
        pointwise = ScalarField.from_values(
            domain,
            trace_mean_curvature(
                grad.x, grad.y, hess.xx, hess.xy, hess.yy
            ),
        )
    return ScalarField.from_values(
        domain,
        face_mean_curvature(
            domain, u.values, grad.x, grad.y, pointwise.values
        ),
    )


def trace_mean_curvature(gx, gy, xx, xy, yy) -> np.ndarray:
    """Nodal ``tr(g^-1 h)`` from raw gradient and Hessian arrays."""
    q_values = np.sqrt(1.0 + gx**2 + gy**2)
    wx, wy = gx / q_values, gy / q_values
    inner = (1.0 - wx**2) * xx - 2.0 * wx * wy * xy + (1.0 - wy**2) * yy
    return inner / q_values


def face_mean_curvature(domain, values, gx, gy, pointwise) -> np.ndarray:
    """
    Conservative face stencil of ``div(grad u / Q)`` on a cartesian grid;
    nodes outside ``domain.interior`` take ``pointwise``.
    """
    step = domain.h
    total = np.zeros(domain.shape)
    for axis, across in ((0, gy), (1, gx)):
        normal = (domain.shift(values, axis, 1) - values) / step
        tangential = 0.5 * (across + domain.shift(across, axis, 1))
        flux = normal / np.sqrt(1.0 + normal**2 + tangential**2)
        total += (flux - domain.shift(flux, axis, -1)) / step
    return np.where(domain.interior, total, pointwise)


def geometry_bundle(u: ScalarField) -> GeometryBundle:
    """
    Compute the geometry of ``graph(u)``.

    ``H`` is evaluated in non-divergence form ``tr(g^-1 h)`` and in
    divergence form; ``K`` as ``det D^2u / Q^4`` and as ``det Dw``. The
    maximum discrepancies over all available nodes are recorded.

    :param u: nodal height function
    :return: the bundle
    :raises NumericalFailure: if ``u`` or a derived quantity is not finite
    """
    u.check_finite("u")
    domain = u.domain
    grad = gradient(u)
    hess = hessian(u)
    q_values = np.sqrt(1.0 + grad.x**2 + grad.y**2)
    Q = ScalarField.from_values(domain, q_values)
    w = VectorField(domain, grad.x / q_values, grad.y / q_values)
    g_inv = TensorField(
        domain, 1.0 - w.x**2, -w.x * w.y, 1.0 - w.y**2
    )
    second_form = TensorField(
        domain, hess.xx / q_values, hess.xy / q_values, hess.yy / q_values
    )
    H = g_inv.product_trace(second_form)
    K = ScalarField.from_values(domain, hess.det().values / q_values**4)
    a, b, c, d = g_inv.matmul(second_form)
    A2 = ScalarField.from_values(domain, a * a + 2.0 * b * c + d * d)
    wx_x, wx_y = cartesian_partials(domain, w.x)
    wy_x, wy_y = cartesian_partials(domain, w.y)
    K_dw = ScalarField.from_values(domain, wx_x * wy_y - wx_y * wy_x)
    H_div = divergence_form_curvature(u, grad, pointwise=H)
    for name, field in (("H", H), ("H_div", H_div), ("A2", A2)):
        field.check_finite(name)
    available = domain.available
    h_gap = _max_gap(H_div, H, available)
    k_gap = _max_gap(K_dw, K, available)
    logger.debug(
        f"geometry on {domain.shape_kind} h={domain.h}: "
        f"H discrepancy {h_gap:.3e}, K discrepancy {k_gap:.3e}"
    )
    return GeometryBundle(
        u=u,
        grad=grad,
        hess=hess,
        Q=Q,
        w=w,
        H=H,
        H_div=H_div,
        K=K,
        K_dw=K_dw,
        A2=A2,
        g_inv=g_inv,
        second_form=second_form,
        h_discrepancy=h_gap,
        k_discrepancy=k_gap,
    )


def _max_gap(first: ScalarField, second: ScalarField, region) -> float:
    gaps = np.abs(first.values - second.values)[region]
    return float(gaps.max()) if gaps.size else 0.0


@attrs.define(frozen=True, eq=False)
class HessianBoundReport:
    """
    Nodal terms of the chain ``|D^2u|^2/Q^2 >= |A|^2 >= |D^2u|^2/Q^6`` and
    of ``|A|^2 <= |Dw|^2 <= Q^2 |A|^2`` with violation counts.
    """

    upper: ScalarField
    middle: ScalarField
    lower: ScalarField
    dw_norm2: ScalarField
    tolerance: float
    upper_violations: int
    lower_violations: int
    shape_operator_violations: int
    majorant_violations: int
    max_relative_violation: float

    @property
    def violations(self) -> int:
        return (
            self.upper_violations
            + self.lower_violations
            + self.shape_operator_violations
            + self.majorant_violations
        )


def hessian_bound_check(
    u: ScalarField,
    bundle: GeometryBundle | None = None,
    tolerance_factor: float = 10.0,
) -> HessianBoundReport:
    """
    Check the Hessian / second fundamental form inequality chain per node.

    :param u: nodal height function
    :param bundle: precomputed geometry of ``u``
    :param tolerance_factor: ``c`` in the tolerance ``c * h^2``
    :return: the report with per-node terms and violation counts
    """
    bundle = bundle or geometry_bundle(u)
    domain = u.domain
    mask = domain.available
    tol = tolerance_factor * domain.h**2
    q = bundle.padded_q
    hess2 = bundle.hess.norm2().values
    upper = hess2 / q**2
    lower = hess2 / q**6
    middle = bundle.A2.values
    a, b, c, d = bundle.shape_operator()
    dw2 = a * a + b * b + c * c + d * d
    over = np.where(mask, middle - upper - tol, -np.inf)
    under = np.where(mask, lower - middle - tol, -np.inf)
    shape_low = np.where(mask, middle - dw2 - tol, -np.inf)
    shape_high = np.where(mask, dw2 - q**2 * middle - tol, -np.inf)
    majorant = np.where(
        mask, bundle.H.values**2 * q - 2.0 * hess2 / q - tol, -np.inf
    )
    scale = np.maximum(np.abs(middle), 1.0)
    excess = np.maximum(over, under) + tol
    relative = max(float(np.max(excess / scale)), 0.0)
    report = HessianBoundReport(
        upper=ScalarField.from_values(domain, upper),
        middle=bundle.A2,
        lower=ScalarField.from_values(domain, lower),
        dw_norm2=ScalarField.from_values(domain, dw2),
        tolerance=tol,
        upper_violations=int(np.sum(over > 0)),
        lower_violations=int(np.sum(under > 0)),
        shape_operator_violations=int(
            np.sum(shape_low > 0) + np.sum(shape_high > 0)
        ),
        majorant_violations=int(np.sum(majorant > 0)),
        max_relative_violation=relative,
    )
    if report.violations:
        logger.warning(
            f"inequality chain violated at {report.violations} nodes "
            f"(tolerance {tol:.3e})"
        )
    return report
