# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Geometry of the domain boundary and of the boundary curve of a graph.

Orientation: the outward normal and the tangent satisfy
``nu = (tau_y, -tau_x)`` and ``tau' = -kappa nu``, so ``kappa >= 0`` on
convex parts. Outer circles run counter-clockwise, holes clockwise.
"""

from __future__ import annotations

import logging
import math

import attrs
import numpy as np
from scipy.integrate import cumulative_trapezoid

from graph_willmore.common.grid import (
    DiscreteDomain,
    ScalarField,
    gradient,
    hessian,
    integrate,
)
from graph_willmore.errors import ConfigurationError, PreconditionError

# pylint: disable=logging-fstring-interpolation

__all__ = [
    "BoundaryData",
    "BoundaryCurve",
    "CurveComponent",
    "BoundaryTrace",
    "GeodesicCurvature",
    "NormalCurvature",
    "trace_field",
    "sample_nodal",
    "geodesic_curvature",
    "normal_curvature",
    "gauss_bonnet_residual",
    "boundary_norms",
    "boundary_rows",
]

logger = logging.getLogger(__name__)

FAMILIES = ("zero", "affine", "sphere_cap", "sine")


@attrs.define(frozen=True)
class BoundaryData:
    """
    Boundary datum ``phi`` given as a smooth function on the closed domain.

    Families:

    * ``zero``: ``phi = 0``
    * ``affine``: ``phi = offset + slope_x x + slope_y y``
    * ``sphere_cap``: ``phi = sqrt(R^2 - |x - c|^2)``
    * ``sine``: ``phi = amplitude Im((z - c)^n)`` which equals
      ``amplitude r^n sin(n theta)``
    """

    family: str = "zero"
    slope_x: float = 0.0
    slope_y: float = 0.0
    offset: float = 0.0
    sphere_radius: float = 1.0
    amplitude: float = 1.0
    frequency: int = 1
    center: tuple = (0.0, 0.0)

    def __attrs_post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"unknown boundary family {self.family!r}",
                section="boundary",
                key="family",
            )

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cx, cy = self.center
        if self.family == "zero":
            return np.zeros(np.broadcast(x, y).shape)
        if self.family == "affine":
            return self.offset + self.slope_x * x + self.slope_y * y
        if self.family == "sphere_cap":
            return np.sqrt(
                self.sphere_radius**2 - (x - cx) ** 2 - (y - cy) ** 2
            )
        z = (x - cx) + 1j * (y - cy)
        return self.amplitude * np.imag(z**self.frequency)

    def gradient(self, x, y) -> tuple:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cx, cy = self.center
        shape = np.broadcast(x, y).shape
        if self.family == "zero":
            return np.zeros(shape), np.zeros(shape)
        if self.family == "affine":
            return (
                np.full(shape, float(self.slope_x)),
                np.full(shape, float(self.slope_y)),
            )
        if self.family == "sphere_cap":
            height = self.value(x, y)
            return -(x - cx) / height, -(y - cy) / height
        n = self.frequency
        z = (x - cx) + 1j * (y - cy)
        derivative = n * z ** (n - 1)
        return (
            self.amplitude * np.imag(derivative),
            self.amplitude * np.real(derivative),
        )

    def field(self, domain: DiscreteDomain) -> ScalarField:
        """The datum evaluated on the grid (the phi-extension)."""
        return ScalarField.from_function(domain, self.value)


@attrs.define(frozen=True)
class CurveComponent:
    """One closed component, samples ``start:stop`` of the curve arrays."""

    kind: str
    center: tuple
    radius: float
    orientation: int
    start: int
    stop: int
    semi_axes: tuple = ()


def _periodic_derivative(values, dt, sdot):
    """Second-order periodic derivative, rescaled to arclength."""
    return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * dt) / sdot


@attrs.define(frozen=True, eq=False)
class BoundaryCurve:
    """
    Arclength-sampled boundary of a planar domain.

    Each component is sampled uniformly in its own parameter ``t``; ``sdot``
    is the signed speed ``ds/dt`` and ``ds`` the periodic trapezoid weight.
    """

    s: np.ndarray
    points: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    kappa: np.ndarray
    ds: np.ndarray
    dt: np.ndarray
    sdot: np.ndarray
    component: np.ndarray
    components: tuple

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def euler_characteristic(self) -> int:
        return 2 - self.m

    @property
    def size(self) -> int:
        return int(self.s.size)

    @property
    def length(self) -> float:
        return float(np.sum(self.ds))

    # ------------
    # Constructors
    # ------------

    @classmethod
    def circle(
        cls, radius: float, samples: int, center=(0.0, 0.0), inner=False
    ) -> BoundaryCurve:
        return cls._assemble([_circle_arrays(radius, samples, center, inner)])

    @classmethod
    def ellipse(
        cls, a: float, b: float, samples: int, center=(0.0, 0.0)
    ) -> BoundaryCurve:
        t = 2.0 * math.pi * np.arange(samples) / samples
        speed = np.hypot(a * np.sin(t), b * np.cos(t))
        points = np.stack(
            [center[0] + a * np.cos(t), center[1] + b * np.sin(t)], axis=1
        )
        tangent = np.stack([-a * np.sin(t), b * np.cos(t)], axis=1)
        tangent /= speed[:, None]
        kappa = a * b / speed**3
        return cls._assemble(
            [
                {
                    "kind": "ellipse",
                    "center": tuple(center),
                    "radius": max(a, b),
                    "orientation": 1,
                    "points": points,
                    "tangent": tangent,
                    "kappa": kappa,
                    "sdot": speed,
                    "dt": 2.0 * math.pi / samples,
                    "semi_axes": (a, b),
                }
            ]
        )

    @classmethod
    def from_domain(
        cls, domain: DiscreteDomain, samples: int | None = None
    ) -> BoundaryCurve:
        """
        Boundary of a disk or annulus domain. Polar grids sample at the
        grid angles so traces are read off the boundary rings directly.

        :raises ConfigurationError: for domains with corners
        """
        if domain.shape_kind == "rectangle":
            raise ConfigurationError(
                "boundary curves of corner domains are not supported"
            )
        radius = domain.params["radius"]
        center = domain.center
        if samples is None:
            if domain.mode == "polar":
                samples = domain.shape[1]
            else:
                samples = max(
                    64, int(math.ceil(2.0 * math.pi * radius / domain.h))
                )
        parts = [_circle_arrays(radius, samples, center, False)]
        if domain.shape_kind == "annulus":
            parts.append(
                _circle_arrays(
                    domain.params["inner_radius"], samples, center, True
                )
            )
        return cls._assemble(parts)

    @classmethod
    def _assemble(cls, parts) -> BoundaryCurve:
        arrays = {name: [] for name in ("points", "tangent", "kappa", "sdot")}
        s_values, ds_values, dt_values, component_ids = [], [], [], []
        components = []
        start = 0
        for index, part in enumerate(parts):
            count = len(part["kappa"])
            for name in arrays:
                arrays[name].append(part[name])
            speed = np.abs(part["sdot"])
            closed = np.append(speed, speed[0])
            s_values.append(
                cumulative_trapezoid(closed, dx=part["dt"], initial=0.0)[:-1]
            )
            ds_values.append(speed * part["dt"])
            dt_values.append(np.full(count, part["dt"]))
            component_ids.append(np.full(count, index))
            components.append(
                CurveComponent(
                    kind=part["kind"],
                    center=part["center"],
                    radius=part["radius"],
                    orientation=part["orientation"],
                    start=start,
                    stop=start + count,
                    semi_axes=part.get("semi_axes", ()),
                )
            )
            start += count
        tangent = np.concatenate(arrays["tangent"])
        normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
        return cls(
            s=np.concatenate(s_values),
            points=np.concatenate(arrays["points"]),
            tangent=tangent,
            normal=normal,
            kappa=np.concatenate(arrays["kappa"]),
            ds=np.concatenate(ds_values),
            dt=np.concatenate(dt_values),
            sdot=np.concatenate(arrays["sdot"]),
            component=np.concatenate(component_ids),
            components=tuple(components),
        )

    # ---------------
    # General methods
    # ---------------

    def derivative(self, values: np.ndarray) -> np.ndarray:
        """Arclength derivative of per-sample values, per component."""
        out = np.empty_like(values, dtype=float)
        for part in self.components:
            window = slice(part.start, part.stop)
            out[window] = _periodic_derivative(
                values[window], self.dt[window][0], self.sdot[window]
            )
        return out

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.ds))

    def integrate_components(self, values: np.ndarray) -> list:
        return [
            float(np.sum((values * self.ds)[part.start : part.stop]))
            for part in self.components
        ]

    def total_curvature(self) -> float:
        return self.integrate(self.kappa)


def _circle_arrays(radius, samples, center, inner):
    if samples < 8:
        raise ConfigurationError(
            f"at least 8 boundary samples needed, got {samples}"
        )
    t = 2.0 * math.pi * np.arange(samples) / samples
    cos, sin = np.cos(t), np.sin(t)
    points = np.stack(
        [center[0] + radius * cos, center[1] + radius * sin], axis=1
    )
    sign = -1.0 if inner else 1.0
    tangent = sign * np.stack([-sin, cos], axis=1)
    return {
        "kind": "circle",
        "center": tuple(center),
        "radius": radius,
        "orientation": -1 if inner else 1,
        "points": points,
        "tangent": tangent,
        "kappa": np.full(samples, sign / radius),
        "sdot": np.full(samples, sign * radius),
        "dt": 2.0 * math.pi / samples,
    }


@attrs.define(frozen=True, eq=False)
class BoundaryTrace:
    """Per-sample traces ``phi, phi', phi'', u_nu`` along a curve."""

    phi: np.ndarray
    dphi: np.ndarray
    ddphi: np.ndarray
    u_nu: np.ndarray
    u_boundary: np.ndarray | None = None
    dphi_dnu: np.ndarray | None = None

    @classmethod
    def from_samples(
        cls, curve: BoundaryCurve, phi, u_nu=None, **extra
    ) -> BoundaryTrace:
        """Traces from sampled ``phi``; derivatives by periodic differences."""
        phi = np.asarray(phi, dtype=float)
        if phi.shape != curve.s.shape:
            raise PreconditionError(
                f"trace has {phi.size} samples, curve has {curve.size}"
            )
        u_nu = np.zeros_like(phi) if u_nu is None else np.asarray(u_nu, float)
        dphi = curve.derivative(phi)
        ddphi = curve.derivative(dphi)
        return cls(phi=phi, dphi=dphi, ddphi=ddphi, u_nu=u_nu, **extra)

    @property
    def boundary_q(self) -> np.ndarray:
        """``Q`` on the boundary, ``sqrt(1 + phi'^2 + u_nu^2)``."""
        return np.sqrt(1.0 + self.dphi**2 + self.u_nu**2)


def _sample_field(u: ScalarField, curve: BoundaryCurve) -> tuple:
    """Values and gradients of ``u`` at the curve samples."""
    domain = u.domain
    grad = gradient(u)
    px, py = curve.points[:, 0], curve.points[:, 1]
    if domain.mode == "polar":
        r, theta = domain.coords
        samples_theta = np.mod(
            np.arctan2(py - domain.center[1], px - domain.center[0]),
            2.0 * math.pi,
        )
        radii = np.hypot(px - domain.center[0], py - domain.center[1])
        grid_theta = theta[0]
        ring_radii = r[:, 0]
        out = [np.empty(curve.size) for _ in range(3)]
        gaps = np.abs(radii[:, None] - ring_radii[None, :])
        ring_of = np.argmin(gaps, axis=1)
        for ring in np.unique(ring_of):
            chosen = ring_of == ring
            for target, array in zip(out, (u.values, grad.x, grad.y)):
                target[chosen] = np.interp(
                    samples_theta[chosen],
                    np.append(grid_theta, 2.0 * math.pi),
                    np.append(array[ring], array[ring][0]),
                )
        return tuple(out)
    hess = hessian(u)
    candidates = domain.available & ~domain.interior_depth(1)
    cand_index = np.nonzero(candidates)
    cx, cy = domain.x[cand_index], domain.y[cand_index]
    nearest = np.argmin(
        (px[:, None] - cx[None, :]) ** 2 + (py[:, None] - cy[None, :]) ** 2,
        axis=1,
    )
    index = (cand_index[0][nearest], cand_index[1][nearest])
    dx = px - domain.x[index]
    dy = py - domain.y[index]
    gx, gy = grad.x[index], grad.y[index]
    hxx, hxy, hyy = hess.xx[index], hess.xy[index], hess.yy[index]
    values = (
        u.values[index]
        + gx * dx
        + gy * dy
        + 0.5 * (hxx * dx * dx + 2.0 * hxy * dx * dy + hyy * dy * dy)
    )
    return values, gx + hxx * dx + hxy * dy, gy + hxy * dx + hyy * dy


def sample_nodal(
    values: np.ndarray, domain: DiscreteDomain, curve: BoundaryCurve
) -> np.ndarray:
    """
    Read a nodal array at the curve samples without extrapolation: periodic
    interpolation on the nearest ring (polar grids) or the value at the
    nearest non-interior-depth node (cartesian grids).
    """
    px, py = curve.points[:, 0], curve.points[:, 1]
    if domain.mode == "polar":
        r, theta = domain.coords
        cx, cy = domain.center
        samples_theta = np.mod(np.arctan2(py - cy, px - cx), 2.0 * math.pi)
        radii = np.hypot(px - cx, py - cy)
        ring_of = np.argmin(np.abs(radii[:, None] - r[None, :, 0]), axis=1)
        out = np.empty(curve.size)
        for ring in np.unique(ring_of):
            chosen = ring_of == ring
            out[chosen] = np.interp(
                samples_theta[chosen],
                np.append(theta[0], 2.0 * math.pi),
                np.append(values[ring], values[ring][0]),
            )
        return out
    candidates = np.nonzero(domain.available & ~domain.interior_depth(1))
    cx, cy = domain.x[candidates], domain.y[candidates]
    nearest = np.argmin(
        (px[:, None] - cx[None, :]) ** 2 + (py[:, None] - cy[None, :]) ** 2,
        axis=1,
    )
    return values[candidates[0][nearest], candidates[1][nearest]]


def trace_field(
    u: ScalarField,
    curve: BoundaryCurve,
    data: BoundaryData | None = None,
    tolerance: float | None = None,
) -> BoundaryTrace:
    """
    Read the traces of ``u`` on ``curve``.

    ``u_nu`` comes from the one-sided second-order gradient at the boundary
    nodes (polar grids) or from a Taylor expansion about the nearest node
    (cartesian grids).

    :param u: nodal field
    :param curve: boundary samples
    :param data: boundary datum; when given, ``phi`` is taken from it and
        the trace of ``u`` must match it
    :param tolerance: allowed trace mismatch, default ``10 h^2 + 1e-10``
    :raises PreconditionError: if ``u`` does not match ``data`` on the
        boundary
    """
    values, gx, gy = _sample_field(u, curve)
    u_nu = gx * curve.normal[:, 0] + gy * curve.normal[:, 1]
    if data is None:
        return BoundaryTrace.from_samples(
            curve, values, u_nu, u_boundary=values
        )
    px, py = curve.points[:, 0], curve.points[:, 1]
    phi = data.value(px, py)
    if tolerance is None:
        tolerance = 10.0 * u.domain.h**2 + 1e-10
    mismatch = float(np.max(np.abs(values - phi)))
    if mismatch > tolerance:
        raise PreconditionError(
            f"trace mismatch: max |u - phi| = {mismatch:.3e} exceeds "
            f"tolerance {tolerance:.3e}"
        )
    fx, fy = data.gradient(px, py)
    dphi_dnu = fx * curve.normal[:, 0] + fy * curve.normal[:, 1]
    return BoundaryTrace.from_samples(
        curve, phi, u_nu, u_boundary=values, dphi_dnu=dphi_dnu
    )


@attrs.define(frozen=True, eq=False)
class GeodesicCurvature:
    """Per-sample geodesic curvature with its integrals."""

    kappa_g: np.ndarray
    integral: float
    abs_integral: float
    bound_rhs: float
    per_component: list

    @property
    def bound_margin(self) -> float:
        return self.bound_rhs - self.abs_integral


def geodesic_curvature(
    trace: BoundaryTrace, curve: BoundaryCurve
) -> GeodesicCurvature:
    """
    Geodesic curvature of the boundary curve of the graph:

    ``kappa_g = (-u_nu phi'' + kappa (1 + phi'^2))
    / ((1 + phi'^2 + u_nu^2)^(1/2) (1 + phi'^2)^(3/2))``

    Integrals use the arclength of the lifted curve,
    ``sqrt(1 + phi'^2) ds``.
    """
    if trace.phi.shape != curve.s.shape:
        raise PreconditionError("trace and curve use different samplings")
    slope2 = 1.0 + trace.dphi**2
    kappa_g = (-trace.u_nu * trace.ddphi + curve.kappa * slope2) / (
        trace.boundary_q * slope2**1.5
    )
    lifted = kappa_g * np.sqrt(slope2)
    return GeodesicCurvature(
        kappa_g=kappa_g,
        integral=curve.integrate(lifted),
        abs_integral=curve.integrate(np.abs(lifted)),
        bound_rhs=curve.integrate(np.abs(trace.ddphi) + np.abs(curve.kappa)),
        per_component=curve.integrate_components(lifted),
    )


@attrs.define(frozen=True, eq=False)
class NormalCurvature:
    kappa_n: np.ndarray
    closed_form: np.ndarray

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(np.abs(self.kappa_n - self.closed_form)))


def normal_curvature(
    u: ScalarField | BoundaryTrace,
    curve: BoundaryCurve,
    data: BoundaryData | None = None,
    tolerance: float | None = None,
) -> NormalCurvature:
    """
    Normal curvature of the lifted boundary curve ``Y = (c, phi)``:
    ``kappa_N = Y'' . N / |Y'|^2`` with the upward graph normal
    ``N = (-grad u, 1) / Q``. ``Y'`` and ``Y''`` are periodic differences
    of the lifted samples.

    :raises PreconditionError: if ``u`` does not match ``data``
    """
    trace = (
        u
        if isinstance(u, BoundaryTrace)
        else trace_field(u, curve, data, tolerance)
    )
    lifted = np.column_stack([curve.points, trace.phi])
    first = np.column_stack([curve.derivative(lifted[:, k]) for k in range(3)])
    second = np.column_stack([curve.derivative(first[:, k]) for k in range(3)])
    grad_b = (
        trace.dphi[:, None] * curve.tangent
        + trace.u_nu[:, None] * curve.normal
    )
    q_b = trace.boundary_q
    normal = np.column_stack([-grad_b, np.ones(curve.size)]) / q_b[:, None]
    kappa_n = np.sum(second * normal, axis=1) / np.sum(first * first, axis=1)
    closed = (trace.ddphi + curve.kappa * trace.u_nu) / (
        q_b * (1.0 + trace.dphi**2)
    )
    return NormalCurvature(kappa_n=kappa_n, closed_form=closed)


def total_gauss_curvature(bundle) -> float:
    """``int K Q dx`` evaluated as ``int det D^2u / Q^3 dx``."""
    q = bundle.padded_q
    return integrate(bundle.hess.det().values / q**3, bundle.domain)


def gauss_bonnet_residual(
    bundle, kappa_g: GeodesicCurvature, chi: int
) -> float:
    """``|int K Q dx + int kappa_g ds - 2 pi chi|``."""
    return abs(
        total_gauss_curvature(bundle) + kappa_g.integral - 2.0 * math.pi * chi
    )


def boundary_norms(trace: BoundaryTrace, curve: BoundaryCurve) -> tuple:
    """``(||phi||_{W^{2,1}}, ||kappa||_{L^1})`` on the boundary."""
    phi_norm = curve.integrate(
        np.abs(trace.phi) + np.abs(trace.dphi) + np.abs(trace.ddphi)
    )
    return phi_norm, curve.integrate(np.abs(curve.kappa))


def boundary_rows(
    curve: BoundaryCurve,
    trace: BoundaryTrace,
    kappa_g: GeodesicCurvature | None = None,
    kappa_n: NormalCurvature | None = None,
):
    """Per-sample rows of the boundary quantities of a trace."""
    for i in range(curve.size):
        yield {
            "component": int(curve.component[i]),
            "s": curve.s[i],
            "x": curve.points[i, 0],
            "y": curve.points[i, 1],
            "kappa": curve.kappa[i],
            "phi": trace.phi[i],
            "dphi": trace.dphi[i],
            "ddphi": trace.ddphi[i],
            "u_nu": trace.u_nu[i],
            "kappa_g": kappa_g.kappa_g[i] if kappa_g else math.nan,
            "kappa_n": kappa_n.kappa_n[i] if kappa_n else math.nan,
        }
