# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Scalar energies of graph surfaces and their bound certificates.

``W0 = 1/4 int H^2 Q dx`` uses the divergence-form mean curvature,
``int K Q dx`` is evaluated as ``int det D^2u / Q^3 dx`` and
``W_gamma = W0 - gamma int K Q dx``.
"""

from __future__ import annotations

import logging
import math

import attrs
import numpy as np

from graph_willmore.common.grid import (
    DiscreteDomain,
    ScalarField,
    gradient,
    integrate,
)
from graph_willmore.errors import PreconditionError
from graph_willmore.geometry.boundary import (
    BoundaryCurve,
    BoundaryData,
    BoundaryTrace,
    boundary_norms,
    total_gauss_curvature,
    trace_field,
)
from graph_willmore.geometry.graphgeom import GeometryBundle, geometry_bundle

# pylint: disable=logging-fstring-interpolation

__all__ = [
    "EnergyReport",
    "Certificates",
    "HelfrichValue",
    "AlphaExtension",
    "willmore",
    "helfrich",
    "physical_range",
    "bound_certificates",
    "apriori_ratio",
    "apriori_ensemble",
    "collar_extension",
    "gauss_energy_EG",
    "gauss_energy_boundary_form",
    "willmore_absolutely_continuous",
    "willmore_gamma_absolutely_continuous",
    "integration_by_parts_residual",
    "gamma_sweep",
]

logger = logging.getLogger(__name__)


def _w0(bundle: GeometryBundle) -> float:
    q = bundle.Q.values
    return 0.25 * integrate(bundle.H_div.values**2 * q, bundle.domain)


def _area(bundle: GeometryBundle) -> float:
    return integrate(bundle.Q)


@attrs.define(frozen=True)
class HelfrichValue:
    value: float
    alpha: float
    h0: float
    gamma: float
    physical: bool
    integrand_min: float


@attrs.define(frozen=True)
class EnergyReport:
    """Energies of one field; ``certificates`` needs the boundary traces."""

    area: float
    willmore_h: float
    total_gauss: float
    w0: float
    gamma: float
    w_gamma: float
    sup_u: float
    apriori_ratio: float
    integrand_min: float
    helfrich: HelfrichValue | None = None
    certificates: dict | None = None

    def as_dict(self) -> dict:
        return attrs.asdict(self, recurse=True)


def physical_range(alpha: float, h0: float, gamma: float) -> bool:
    """``alpha >= 0, 0 <= gamma <= 1, gamma H0^2 <= 4 alpha (1 - gamma)``."""
    return (
        alpha >= 0.0
        and 0.0 <= gamma <= 1.0
        and gamma * h0**2 <= 4.0 * alpha * (1.0 - gamma)
    )


def helfrich(
    u: ScalarField,
    alpha: float = 0.0,
    h0: float = 0.0,
    gamma: float = 0.0,
    bundle: GeometryBundle | None = None,
) -> HelfrichValue:
    """
    Canham-Helfrich energy
    ``alpha int Q + 1/4 int (H - H0)^2 Q - gamma int K Q``.

    Parameters outside the physical range are accepted and flagged.
    """
    bundle = bundle or geometry_bundle(u)
    q = bundle.Q.values
    bending = 0.25 * integrate((bundle.H_div.values - h0) ** 2 * q, u.domain)
    value = alpha * _area(bundle) + bending - gamma * total_gauss_curvature(
        bundle
    )
    physical = physical_range(alpha, h0, gamma)
    if not physical:
        logger.warning(
            f"Helfrich parameters alpha={alpha}, H0={h0}, gamma={gamma} "
            "are outside the physical range"
        )
    integrand = (
        alpha + 0.25 * (bundle.H.values - h0) ** 2 - gamma * bundle.K.values
    )
    return HelfrichValue(
        value=value,
        alpha=alpha,
        h0=h0,
        gamma=gamma,
        physical=physical,
        integrand_min=float(np.min(integrand[u.domain.available])),
    )


def apriori_ratio(
    u: ScalarField, bundle: GeometryBundle | None = None
) -> float:
    """``(sup |u| + int Q dx) / (W0^2 + 1)``; the sup is the nodal maximum."""
    bundle = bundle or geometry_bundle(u)
    return (u.max_abs() + _area(bundle)) / (_w0(bundle) ** 2 + 1.0)


def apriori_ensemble(fields) -> np.ndarray:
    """A-priori ratios of an ensemble of fields, in input order."""
    return np.array([apriori_ratio(field) for field in fields])


def willmore(
    u: ScalarField,
    gamma: float = 0.0,
    alpha: float | None = None,
    h0: float = 0.0,
    bundle: GeometryBundle | None = None,
) -> EnergyReport:
    """
    Willmore energies of ``graph(u)`` over the (excised) domain.

    :param u: nodal height function
    :param gamma: Gauss curvature weight
    :param alpha: when given, the Helfrich energy with ``alpha, h0, gamma``
        is attached
    :param h0: spontaneous curvature
    :param bundle: precomputed geometry of ``u``
    :raises NumericalFailure: if the geometry is not finite
    """
    bundle = bundle or geometry_bundle(u)
    q = bundle.Q.values
    w0 = _w0(bundle)
    total_gauss = total_gauss_curvature(bundle)
    integrand = 0.25 * bundle.H.values**2 - gamma * bundle.K.values
    report = EnergyReport(
        area=_area(bundle),
        willmore_h=0.25 * integrate(bundle.H.values**2 * q, u.domain),
        total_gauss=total_gauss,
        w0=w0,
        gamma=gamma,
        w_gamma=w0 - gamma * total_gauss,
        sup_u=u.max_abs(),
        apriori_ratio=(u.max_abs() + _area(bundle)) / (w0**2 + 1.0),
        integrand_min=float(np.min(integrand[u.domain.available])),
        helfrich=(
            None
            if alpha is None
            else helfrich(u, alpha, h0, gamma, bundle)
        ),
    )
    logger.debug(
        f"W0={report.w0:.6e} total_gauss={report.total_gauss:.6e} "
        f"W_gamma={report.w_gamma:.6e} (gamma={gamma})"
    )
    return report


@attrs.define(frozen=True)
class Certificates:
    """Left and right sides of the boundary-controlled energy bounds."""

    phi_norm: float
    kappa_norm: float
    chi: int
    kbound_lhs: float
    kbound_rhs: float
    abound_lhs: float
    abound_rhs: float
    gamma_gap_lhs: float
    gamma_gap_rhs: float
    ah_integral: float
    ah_reference: float
    relaxation_lhs: float
    relaxation_rhs: float
    bv_lhs: float
    bv_rhs: float

    @property
    def margins(self) -> dict:
        return {
            "kbound": self.kbound_rhs - self.kbound_lhs,
            "abound": self.abound_rhs - self.abound_lhs,
            "gamma_gap": self.gamma_gap_rhs - self.gamma_gap_lhs,
            "relaxation": self.relaxation_rhs - self.relaxation_lhs,
            "bv": self.bv_rhs - self.bv_lhs,
        }

    @property
    def ah_gap(self) -> float:
        return abs(self.ah_integral - self.ah_reference)

    def holds(self, tolerance: float = 0.0) -> bool:
        return all(margin >= -tolerance for margin in self.margins.values())

    def as_dict(self) -> dict:
        out = attrs.asdict(self)
        out["margins"] = self.margins
        out["ah_gap"] = self.ah_gap
        return out


def bound_certificates(
    u: ScalarField,
    curve: BoundaryCurve,
    data: BoundaryData | None = None,
    gamma: float = 0.0,
    bundle: GeometryBundle | None = None,
    trace: BoundaryTrace | None = None,
) -> Certificates:
    """
    Evaluate the boundary-controlled bounds

    * ``|int K Q| <= ||phi||_W21 + ||kappa||_L1 + 2 pi |chi|``
    * ``int |A|^2 Q <= 4 W0 + 2 (||phi||_W21 + ||kappa||_L1) - 4 pi chi``,
      with ``W0`` taken from the nodal ``H`` that ``|A|^2`` is built from
    * ``|W0 - W_gamma| <= |gamma| (||phi||_W21 + ||kappa||_L1 + 2 pi |chi|)``
    * ``int |D^2u|^2 / Q^5 <= int |A|^2 Q``
    * ``int |grad Q^-1| <= (int |D^2u|^2 / Q^5)^(1/2) (int Q)^(1/2)``

    and the identity ``int |A|^2 Q = int (H^2 - 2 K) Q``, which holds to
    roundoff for the nodal ``H``.

    :raises PreconditionError: if ``u`` does not match ``data`` on the
        boundary
    """
    bundle = bundle or geometry_bundle(u)
    if trace is None:
        trace = trace_field(u, curve, data)
    phi_norm, kappa_norm = boundary_norms(trace, curve)
    chi = u.domain.euler_characteristic
    q = bundle.padded_q
    total_gauss = total_gauss_curvature(bundle)
    nodal_w0 = 0.25 * integrate(bundle.H.values**2 * q, u.domain)
    boundary_budget = phi_norm + kappa_norm
    ah_integral = integrate(bundle.A2.values * q, u.domain)
    hess2 = bundle.hess.norm2().values
    relaxation = integrate(hess2 / q**5, u.domain)
    inverse_q = ScalarField.from_values(u.domain, 1.0 / q)
    bv = integrate(gradient(inverse_q).norm())
    return Certificates(
        phi_norm=phi_norm,
        kappa_norm=kappa_norm,
        chi=chi,
        kbound_lhs=abs(total_gauss),
        kbound_rhs=boundary_budget + 2.0 * math.pi * abs(chi),
        abound_lhs=ah_integral,
        abound_rhs=4.0 * nodal_w0
        + 2.0 * boundary_budget
        - 4.0 * math.pi * chi,
        gamma_gap_lhs=abs(gamma * total_gauss),
        gamma_gap_rhs=abs(gamma)
        * (boundary_budget + 2.0 * math.pi * abs(chi)),
        ah_integral=ah_integral,
        ah_reference=integrate(
            (bundle.H.values**2 - 2.0 * bundle.K.values) * q, u.domain
        ),
        relaxation_lhs=relaxation,
        relaxation_rhs=ah_integral,
        bv_lhs=bv,
        bv_rhs=math.sqrt(relaxation * _area(bundle)),
    )


# --------------------------------------
# Total Gauss curvature from the boundary
# --------------------------------------


@attrs.define(frozen=True, eq=False)
class AlphaExtension:
    """Nodal extension ``alpha`` of ``phi'' / (1 + phi'^2)`` off the curve."""

    field: ScalarField
    boundary_values: np.ndarray
    collar: float


def _smoothstep_cutoff(distance: np.ndarray, collar: float) -> np.ndarray:
    t = np.clip((distance - collar) / collar, 0.0, 1.0)
    return 1.0 - 3.0 * t**2 + 2.0 * t**3


def _component_pullback(domain, curve, values):
    """Nearest-component distance and angular interpolation of ``values``."""
    best_distance = np.full(domain.shape, np.inf)
    pulled = np.zeros(domain.shape)
    for part in curve.components:
        if part.kind != "circle":
            raise PreconditionError(
                "automatic alpha extensions need circular boundary components"
            )
        cx, cy = part.center
        radius = np.hypot(domain.x - cx, domain.y - cy)
        angle = np.mod(np.arctan2(domain.y - cy, domain.x - cx), 2.0 * math.pi)
        window = slice(part.start, part.stop)
        points = curve.points[window]
        grid_angles = np.mod(
            np.arctan2(points[:, 1] - cy, points[:, 0] - cx), 2.0 * math.pi
        )
        order = np.argsort(grid_angles)
        xp = grid_angles[order]
        fp = values[window][order]
        interp = np.interp(angle, xp, fp, period=2.0 * math.pi)
        distance = np.abs(radius - part.radius)
        closer = distance < best_distance
        best_distance = np.where(closer, distance, best_distance)
        pulled = np.where(closer, interp, pulled)
    return best_distance, pulled


def collar_extension(
    domain: DiscreteDomain,
    curve: BoundaryCurve,
    trace: BoundaryTrace,
    collar_fraction: float = 0.2,
) -> AlphaExtension:
    """
    ``alpha = beta(d) E`` where ``E`` pulls the boundary values back along
    the nearest-boundary-point projection and ``beta`` is one within
    ``c = collar_fraction * inradius`` of the boundary, decays by a cubic
    smoothstep and vanishes beyond ``2c``.
    """
    boundary_values = trace.ddphi / (1.0 + trace.dphi**2)
    collar = collar_fraction * domain.inradius
    distance, pulled = _component_pullback(domain, curve, boundary_values)
    values = _smoothstep_cutoff(distance, collar) * pulled
    return AlphaExtension(
        field=ScalarField.from_values(domain, values),
        boundary_values=boundary_values,
        collar=collar,
    )


def _alpha_from_function(domain, curve, trace, func, tolerance):
    boundary_values = trace.ddphi / (1.0 + trace.dphi**2)
    sampled = func(curve.points[:, 0], curve.points[:, 1])
    mismatch = float(np.max(np.abs(sampled - boundary_values)))
    if mismatch > tolerance:
        raise PreconditionError(
            f"alpha trace mismatch: max deviation {mismatch:.3e} exceeds "
            f"{tolerance:.3e}"
        )
    return AlphaExtension(
        field=ScalarField.from_function(domain, func),
        boundary_values=boundary_values,
        collar=math.nan,
    )


def gauss_energy_EG(  # pylint: disable=invalid-name
    u: ScalarField,
    curve: BoundaryCurve,
    trace: BoundaryTrace | None = None,
    data: BoundaryData | None = None,
    alpha=None,
    collar_fraction: float = 0.2,
    bundle: GeometryBundle | None = None,
    tolerance: float | None = None,
) -> float:
    """
    Total Gauss curvature through an extension of the boundary datum:

    ``E_G = 2 pi chi + int H alpha dx + int (grad u / Q) . grad alpha dx
    - int kappa / Q ds``

    :param alpha: an :class:`AlphaExtension`, a callable ``alpha(x, y)`` or
        ``None`` for the automatic collar extension
    :raises PreconditionError: on a trace or alpha-trace mismatch
    """
    domain = u.domain
    bundle = bundle or geometry_bundle(u)
    if trace is None:
        trace = trace_field(u, curve, data)
    if alpha is None:
        alpha = collar_extension(domain, curve, trace, collar_fraction)
    elif callable(alpha):
        alpha = _alpha_from_function(
            domain,
            curve,
            trace,
            alpha,
            tolerance if tolerance is not None else 10.0 * domain.h,
        )
    alpha_values = alpha.field.values
    alpha_grad = gradient(alpha.field)
    volume = integrate(
        bundle.H_div.values * alpha_values
        + bundle.w.x * alpha_grad.x
        + bundle.w.y * alpha_grad.y,
        domain,
    )
    edge = curve.integrate(curve.kappa / trace.boundary_q)
    return 2.0 * math.pi * domain.euler_characteristic + volume - edge


def gauss_energy_boundary_form(
    trace: BoundaryTrace, curve: BoundaryCurve, chi: int
) -> float:
    """
    ``2 pi chi + int (u_nu / Q) phi'' / (1 + phi'^2) ds
    - int kappa / Q ds``.
    """
    q_b = trace.boundary_q
    return (
        2.0 * math.pi * chi
        + curve.integrate(
            trace.u_nu / q_b * trace.ddphi / (1.0 + trace.dphi**2)
        )
        - curve.integrate(curve.kappa / q_b)
    )


# -----------------------------
# Absolutely continuous energies
# -----------------------------


def _regular_field(u: ScalarField, jump_flags) -> ScalarField:
    if jump_flags is None:
        return u
    flags = np.asarray(jump_flags)
    if flags.shape != u.domain.shape or flags.dtype != bool:
        raise PreconditionError(
            "jump flags must be a boolean mask of the domain shape"
        )
    if np.any(flags & ~u.domain.available):
        raise PreconditionError("jump flags mark exterior nodes")
    if not np.any(u.domain.available & ~flags):
        raise PreconditionError("jump flags cover the whole domain")
    restricted = u.domain.restrict(flags)
    return ScalarField.from_values(restricted, u.values)


def willmore_absolutely_continuous(
    u: ScalarField, jump_flags: np.ndarray | None = None
) -> float:
    """
    Willmore energy of the regular part of ``u``: nodes flagged as lying on
    a jump facet are removed from the domain and the remaining stencils
    never reach across them. Without flags this is exactly ``W0``.

    :raises PreconditionError: if the flags are inconsistent with the domain
    """
    regular = _regular_field(u, jump_flags)
    return _w0(geometry_bundle(regular))


def willmore_gamma_absolutely_continuous(
    u: ScalarField,
    curve: BoundaryCurve,
    gamma: float,
    jump_flags: np.ndarray | None = None,
    data: BoundaryData | None = None,
    collar_fraction: float = 0.2,
) -> float:
    """``W^a_gamma = W^a_0 - gamma E_G`` on the regular part of ``u``."""
    regular = _regular_field(u, jump_flags)
    bundle = geometry_bundle(regular)
    trace = trace_field(u, curve, data)
    e_g = gauss_energy_EG(
        regular,
        curve,
        trace=trace,
        collar_fraction=collar_fraction,
        bundle=bundle,
    )
    return _w0(bundle) - gamma * e_g


def integration_by_parts_residual(
    bundle: GeometryBundle, trace: BoundaryTrace, curve: BoundaryCurve
) -> float:
    """``|int u H dx + int (Q - 1/Q) dx - int phi u_nu / Q ds|``."""
    u = bundle.u
    q = bundle.padded_q
    volume = integrate(u.values * bundle.H_div.values + q - 1.0 / q, u.domain)
    edge = curve.integrate(trace.phi * trace.u_nu / trace.boundary_q)
    return abs(volume - edge)


def gamma_sweep(u: ScalarField, gammas, bundle=None):
    """Rows ``gamma, W0, total_gauss, W_gamma`` for a list of weights."""
    bundle = bundle or geometry_bundle(u)
    w0 = _w0(bundle)
    total_gauss = total_gauss_curvature(bundle)
    return [
        {
            "gamma": gamma,
            "w0": w0,
            "total_gauss": total_gauss,
            "w_gamma": w0 - gamma * total_gauss,
        }
        for gamma in gammas
    ]
