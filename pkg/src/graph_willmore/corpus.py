# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Analytic example fields, their smooth approximating sequences and the
smooth reference corpus used by the verification suite.

Example ids:

* ``logloglinear``: ``u = eps x1 log|log r|`` near the origin
* ``sqrtlog``: ``u = x1 (-log r)^(1/2)`` near the origin
* ``radial_k``: radial profile ``sgn(1 - r) |1 - r|^(1/k)`` around the
  unit circle, plateaus ``1`` inside and ``-1`` outside, on the disk of
  radius 2
* ``radial_k_cylinder``: the same curve with a vertical cylinder of height
  ``jump`` inserted at ``r = 1``

Near-origin profiles are glued to zero by a quintic cutoff that is one for
``r <= 1/4`` and zero for ``r >= 1/2``.
"""

from __future__ import annotations

import logging
import math

import attrs
import numpy as np
from scipy import integrate as scipy_integrate

from graph_willmore.common.grid import (
    DiscreteDomain,
    ScalarField,
    TensorField,
    VectorField,
    gradient,
    hessian,
    integrate,
)
from graph_willmore.errors import ParameterError, ResolutionError
from graph_willmore.geometry.boundary import BoundaryData

# pylint: disable=logging-fstring-interpolation

__all__ = [
    "EXAMPLES",
    "ExampleField",
    "LogLogLinear",
    "SqrtLog",
    "RadialK",
    "CapInterpolant",
    "ExampleBuild",
    "DivergenceTable",
    "CorpusEntry",
    "make_example",
    "build_example",
    "derivative_agreement",
    "divergence_diagnostics",
    "radial_oracle",
    "sequence_sigma",
    "mollified_sequence",
    "smooth_corpus",
    "random_smooth_field",
    "random_smooth_fields",
    "bump",
    "l1_to_target",
]

logger = logging.getLogger(__name__)

EXAMPLES = ("logloglinear", "radial_k", "radial_k_cylinder", "sqrtlog")

_THETA_POINTS = 16
_TINY = 1e-300


def _quintic(s):
    """Quintic cutoff ``chi`` (one for ``s <= 0``, zero for ``s >= 1``) and
    its first two derivatives."""
    s = np.clip(s, 0.0, 1.0)
    value = 1.0 - (10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5)
    first = -30.0 * s**2 * (1.0 - s) ** 2
    second = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    return value, first, second


def _quintic_integral(s):
    s = np.clip(s, 0.0, 1.0)
    return s - 2.5 * s**4 + 3.0 * s**5 - s**6


def _blend(r, start, width):
    value, first, second = _quintic((r - start) / width)
    return value, first / width, second / width**2


class ExampleField:
    """
    Analytic height function with derivatives off its singular set.

    Subclasses implement :meth:`derivatives`, returning the value, the
    gradient and the Hessian entries at arbitrary points.
    """

    example_id = "example"
    outer_radius = 1.0
    sigma = 0.0

    def derivatives(self, x, y) -> tuple:
        """``(u, ux, uy, uxx, uxy, uyy)`` at the given points."""
        raise NotImplementedError

    def value(self, x, y):
        return self.derivatives(x, y)[0]

    def gradient(self, x, y) -> tuple:
        return self.derivatives(x, y)[1:3]

    def hessian(self, x, y) -> tuple:
        return self.derivatives(x, y)[3:]

    def singular_distance(self, x, y):
        """Distance to the singular set."""
        return np.hypot(x, y)

    def excluded(self, domain: DiscreteDomain, delta: float) -> np.ndarray:
        """Quadrature weights of ``domain`` at distance ``>= delta`` from
        the singular set."""
        return domain.radial_region(delta)

    def reference(self) -> ExampleField:
        """Field whose nodal derivatives are checked analytically."""
        return self

    def smooth_region(self, domain: DiscreteDomain, delta: float):
        """Nodes at distance ``>= delta`` from the singular set whose
        derivative stencils stay central."""
        return domain.interior_depth(2) & (
            self.singular_distance(domain.x, domain.y) >= delta
        )

    def breakpoints(self) -> list:
        """Radii where the analytic integrands change formula."""
        return [0.25, 0.5]

    def boundary_data(self) -> BoundaryData:
        return BoundaryData("zero")

    def domain(
        self, h: float, mode: str = "polar", excision: float = 0.0
    ) -> DiscreteDomain:
        return DiscreteDomain.disk(
            radius=self.outer_radius, h=h, mode=mode, excision=excision
        )

    def approximant(self, sigma: float) -> ExampleField:
        """Smooth member of the approximating family at scale ``sigma``."""
        raise NotImplementedError

    def field(self, domain: DiscreteDomain) -> ScalarField:
        return ScalarField.from_function(domain, self.value)

    def quantity(self, name: str, x, y, p: float = 1.0):
        """
        Pointwise analytic integrands: ``grad_p`` (``|grad u|^p``),
        ``hess2`` (``|D^2u|^2``), ``bending`` (``H^2 Q / 4``), ``area``
        (``Q``).
        """
        _, ux, uy, uxx, uxy, uyy = self.derivatives(x, y)
        grad2 = ux**2 + uy**2
        if name == "grad_p":
            return grad2 ** (0.5 * p)
        if name == "hess2":
            return uxx**2 + 2.0 * uxy**2 + uyy**2
        q = np.sqrt(1.0 + grad2)
        if name == "area":
            return q
        if name == "bending":
            laplace = uxx + uyy
            directional = ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy
            curvature = (laplace * q**2 - directional) / q**3
            return 0.25 * curvature**2 * q
        raise ParameterError(f"unknown quantity {name!r}")

    def describe(self) -> dict:
        return {"id": self.example_id, "sigma": self.sigma}


class _LinearTimesRadial(ExampleField):
    """
    ``u = amplitude x1 beta(r) L(rho)``, ``rho = sqrt(r^2 + sigma^2)``.
    With ``cutoff=False`` the pure profile (``beta = 1``) is used on the
    whole unit disk.
    """

    cap_sigma = 0.5

    def __init__(
        self, amplitude: float = 1.0, sigma: float = 0.0, cutoff: bool = True
    ) -> None:
        self.amplitude = float(amplitude)
        self.sigma = float(sigma)
        self.cutoff = cutoff

    def radial_profile(self, rho) -> tuple:
        """``(L, L', L'')`` of the near-origin profile."""
        raise NotImplementedError

    def pure(self) -> _LinearTimesRadial:
        """The near-origin profile without the cutoff."""
        return type(self)(self.amplitude, self.sigma, cutoff=False)

    def reference(self) -> ExampleField:
        return self.pure()

    def smooth_region(self, domain: DiscreteDomain, delta: float):
        """Checked on the pure profile out to ``r = 1/2``."""
        r = np.hypot(domain.x, domain.y)
        return super().smooth_region(domain, delta) & (r <= 0.5)

    def derivatives(self, x, y) -> tuple:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        r_safe = np.maximum(r, _TINY)
        if self.cutoff:
            active = r < 0.5
            beta, beta_1, beta_2 = _blend(r, 0.25, 0.25)
        else:
            active = r < 1.0
            beta, beta_1, beta_2 = np.ones_like(r), 0.0 * r, 0.0 * r
        rho = np.sqrt(r**2 + self.sigma**2)
        rho_safe = np.where(active, np.clip(rho, _TINY, 1.0 - 1e-12), 0.5)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ell, ell_1, ell_2 = self.radial_profile(rho_safe)
            lam = ell
            lam_1 = ell_1 * r / rho_safe
            lam_2 = (
                ell_2 * (r / rho_safe) ** 2
                + ell_1 * self.sigma**2 / rho_safe**3
            )
            amp = self.amplitude
            f = amp * beta * lam
            f_2 = amp * (beta_2 * lam + 2.0 * beta_1 * lam_1 + beta * lam_2)
            f_over_r = amp * (
                np.where(beta_1 != 0, beta_1 * lam / r_safe, 0.0)
                + beta * ell_1 / rho_safe
            )
            xr, yr = x / r_safe, y / r_safe
            spread = f_2 - f_over_r
            u = np.where(r > 0, x * f, 0.0)
            ux = f + x * x * f_over_r
            uy = x * y * f_over_r
            uxx = 2.0 * x * f_over_r + x * (spread * xr * xr + f_over_r)
            uxy = y * f_over_r + x * spread * xr * yr
            uyy = x * (spread * yr * yr + f_over_r)
        out = [u, ux, uy, uxx, uxy, uyy]
        return tuple(np.where(active, part, 0.0) for part in out)

    def approximant(self, sigma: float) -> ExampleField:
        """
        The profile evaluated at ``rho = sqrt(r^2 + sigma^2)`` in place of
        a radial convolution with a mollifier of width ``sigma``. The
        result is smooth at the origin and agrees with the example for
        ``r >> sigma``. Scales from ``cap_sigma`` on give the constant
        interpolant of the zero datum.
        """
        if sigma >= self.cap_sigma:
            return CapInterpolant(0.0, self.outer_radius)
        return type(self)(self.amplitude, sigma, self.cutoff)

    def describe(self) -> dict:
        return {
            "id": self.example_id,
            "amplitude": self.amplitude,
            "sigma": self.sigma,
        }


class LogLogLinear(_LinearTimesRadial):
    """``u = eps x1 log|log r|``; tends to zero as ``eps -> 0``."""

    example_id = "logloglinear"

    def radial_profile(self, rho) -> tuple:
        lg = np.log(rho)
        return (
            np.log(-lg),
            1.0 / (rho * lg),
            -(lg + 1.0) / (rho * lg) ** 2,
        )


class SqrtLog(_LinearTimesRadial):
    """``u = x1 (-log r)^(1/2)``: finite energy, not in ``H^2``."""

    example_id = "sqrtlog"

    def radial_profile(self, rho) -> tuple:
        s = -np.log(rho)
        return (
            np.sqrt(s),
            -0.5 / (rho * np.sqrt(s)),
            0.5 / (rho**2 * np.sqrt(s)) - 0.25 / (rho**2 * s**1.5),
        )


class CapInterpolant(ExampleField):
    """Constant field equal to the (constant) boundary value."""

    example_id = "cap"

    def __init__(self, level: float, outer_radius: float) -> None:
        self.level = float(level)
        self.outer_radius = outer_radius
        self.sigma = math.inf

    def derivatives(self, x, y) -> tuple:
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        zeros = np.zeros(shape)
        return (np.full(shape, self.level),) + (zeros,) * 5

    def boundary_data(self) -> BoundaryData:
        return BoundaryData("affine", offset=self.level)

    def approximant(self, sigma: float) -> ExampleField:
        return self

    def describe(self) -> dict:
        return {"id": self.example_id, "level": self.level}


class RadialK(ExampleField):
    """
    Radial field on the disk of radius 2 whose generating curve near
    ``r = 1`` is ``r = R(z) = 1 - zeta(z)^k``, with ``zeta`` the soft
    threshold of ``z`` at ``c = jump / 2``. For ``jump = 0`` the curve is
    the graph of ``sgn(1 - r)|1 - r|^(1/k)``; otherwise a vertical segment
    of height ``jump`` sits over the unit circle.

    Approximants tilt the curve to ``R(z) - t B(z)`` with
    ``B' = chi(|zeta| / m)``, which makes it strictly decreasing so the
    inverse is a smooth graph with maximal slope ``1/t``.
    """

    outer_radius = 2.0
    band = 0.3

    def __init__(self, k: int = 3, jump: float = 0.0, sigma: float = 0.0):
        if int(k) != k or k < 3 or int(k) % 2 == 0:
            raise ParameterError(
                f"k must be an odd integer >= 3, got {k}",
                section="example",
                key="k",
            )
        if jump < 0:
            raise ParameterError(
                f"jump height must be nonnegative, got {jump}",
                section="example",
                key="jump",
            )
        self.k = int(k)
        self.jump = float(jump)
        self.shift = 0.5 * self.jump
        self.sigma = float(sigma)
        self.tilt = min(self.sigma, self.max_tilt) if self.sigma > 0 else 0.0

    @property
    def example_id(self) -> str:
        return "radial_k_cylinder" if self.jump > 0 else "radial_k"

    @property
    def max_tilt(self) -> float:
        """Tilts saturate so the shifted profile stays inside the blends."""
        return 0.125 / (self.shift + 0.5 * self.band)

    @property
    def level(self) -> float:
        return 1.0 + self.shift

    def boundary_data(self) -> BoundaryData:
        return BoundaryData("affine", offset=-self.level)

    def singular_distance(self, x, y):
        return np.abs(np.hypot(x, y) - 1.0)

    def excluded(self, domain: DiscreteDomain, delta: float) -> np.ndarray:
        return domain.radial_region(0.0, 1.0 - delta) + domain.radial_region(
            1.0 + delta
        )

    def breakpoints(self) -> list:
        points = [0.5, 0.75, 1.25, 1.5]
        half = self.band**self.k + self.tilt * (self.shift + 0.5 * self.band)
        if self.tilt > 0:
            points += [
                1.0 - half,
                1.0 - self.tilt * self.shift,
                1.0 + self.tilt * self.shift,
                1.0 + half,
            ]
        return sorted(set(points))

    def inverse_profile(self, z):
        """``R(z) = 1 - zeta(z)^k`` (polynomial in ``z`` for ``jump = 0``)."""
        z = np.asarray(z, dtype=float)
        zeta = np.sign(z) * np.maximum(np.abs(z) - self.shift, 0.0)
        return 1.0 - zeta**self.k

    def _tilt_terms(self, z) -> tuple:
        """``B, B', B''`` of the tilt."""
        m, c = self.band, self.shift
        az = np.abs(z)
        s = np.maximum(az - c, 0.0) / m
        chi, chi_1, _ = _quintic(s)
        outside = az > c
        value = np.sign(z) * (np.minimum(az, c) + m * _quintic_integral(s))
        first = chi
        second = np.where(outside, np.sign(z) * chi_1 / m, 0.0)
        return value, first, second

    def curve(self, z) -> tuple:
        """``R_t(z)`` and its first two derivatives."""
        z = np.asarray(z, dtype=float)
        k, c = self.k, self.shift
        zeta = np.sign(z) * np.maximum(np.abs(z) - c, 0.0)
        outside = np.abs(z) > c
        value = 1.0 - zeta**k
        first = np.where(outside, -k * zeta ** (k - 1), 0.0)
        second = np.where(outside, -k * (k - 1) * zeta ** (k - 2), 0.0)
        if self.tilt > 0:
            b, b_1, b_2 = self._tilt_terms(z)
            value = value - self.tilt * b
            first = first - self.tilt * b_1
            second = second - self.tilt * b_2
        return value, first, second

    def _limit_profile(self, rho) -> tuple:
        """Inverse of ``R`` off ``r = 1``: value and two derivatives."""
        a = 1.0 / self.k
        d = np.abs(1.0 - rho)
        sign = np.sign(1.0 - rho)
        with np.errstate(divide="ignore", invalid="ignore"):
            value = sign * d**a + self.shift * sign
            first = -a * d ** (a - 1.0)
            second = sign * a * (a - 1.0) * d ** (a - 2.0)
        return value, first, second

    def profile(self, r) -> tuple:
        """Profile ``z(r)`` near the unit circle and its derivatives."""
        r = np.asarray(r, dtype=float)
        if self.tilt == 0:
            return self._limit_profile(r)
        m, c = self.band, self.shift
        offset = self.tilt * (c + 0.5 * m)
        half = m**self.k + offset
        value, first, second = self._limit_profile(
            r + np.where(r < 1.0, offset, -offset)
        )
        inside = np.abs(1.0 - r) < half
        if np.any(inside):
            target = r[inside] if r.ndim else r
            lo = np.full(np.shape(target), -(c + m))
            hi = np.full(np.shape(target), c + m)
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                above = self.curve(mid)[0] > target
                lo = np.where(above, mid, lo)
                hi = np.where(above, hi, mid)
            z = 0.5 * (lo + hi)
            _, c_1, c_2 = self.curve(z)
            value = np.where(inside, 0.0, value)
            first = np.where(inside, 0.0, first)
            second = np.where(inside, 0.0, second)
            value[inside] = z
            first[inside] = 1.0 / c_1
            second[inside] = -c_2 / c_1**3
        return value, first, second

    def radial(self, r) -> tuple:
        """``G(r), G'(r), G''(r)`` of the glued radial field."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        w_in, w_in_1, w_in_2 = _blend(r, 0.5, 0.25)
        rise, rise_1, rise_2 = _blend(r, 1.25, 0.25)
        w_out, w_out_1, w_out_2 = 1.0 - rise, -rise_1, -rise_2
        middle = 1.0 - w_in - w_out
        middle_1 = -w_in_1 - w_out_1
        middle_2 = -w_in_2 - w_out_2
        p, p_1, p_2 = np.zeros_like(r), np.zeros_like(r), np.zeros_like(r)
        band = middle > 0
        if np.any(band):
            vp, vp_1, vp_2 = self.profile(r[band])
            p[band], p_1[band], p_2[band] = vp, vp_1, vp_2
        with np.errstate(invalid="ignore"):
            top, bottom = self.level, -self.level
            g = w_in * top + middle * p + w_out * bottom
            g_1 = w_in_1 * top + middle_1 * p + middle * p_1 + w_out_1 * bottom
            g_2 = (
                w_in_2 * top
                + middle_2 * p
                + 2.0 * middle_1 * p_1
                + np.where(middle > 0, middle * p_2, 0.0)
                + w_out_2 * bottom
            )
        if self.tilt == 0 and self.shift > 0:
            g = np.where(r == 1.0, 0.0, g)
        return g, g_1, g_2

    def derivatives(self, x, y) -> tuple:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        r = np.hypot(x, y).reshape(-1)
        g, g_1, g_2 = self.radial(r)
        r_safe = np.maximum(r, _TINY)
        with np.errstate(invalid="ignore"):
            over_r = np.where(r < 0.5, 0.0, g_1 / r_safe)
            spread = np.where(r < 0.5, 0.0, g_2 - over_r)
        xr = np.broadcast_to(x, shape).reshape(-1) / r_safe
        yr = np.broadcast_to(y, shape).reshape(-1) / r_safe
        parts = (
            g,
            over_r * xr * r,
            over_r * yr * r,
            spread * xr * xr + over_r,
            spread * xr * yr,
            spread * yr * yr + over_r,
        )
        return tuple(part.reshape(shape) for part in parts)

    def max_slope(self, samples: int = 20001) -> float:
        """Maximal ``|G'|`` sampled densely across the band at ``r = 1``."""
        if self.tilt == 0:
            return math.inf
        half = self.band**self.k + self.tilt * (self.shift + self.band)
        r = np.linspace(1.0 - half, 1.0 + half, samples)
        return float(np.max(np.abs(self.radial(r)[1])))

    def approximant(self, sigma: float) -> ExampleField:
        if sigma >= 2.0 * self.outer_radius:
            return CapInterpolant(-self.level, self.outer_radius)
        return RadialK(self.k, self.jump, sigma)

    def jump_flags(self, domain: DiscreteDomain, width: float) -> np.ndarray:
        """Nodes within ``width`` of the jump circle."""
        r = np.hypot(domain.x, domain.y)
        return domain.available & (np.abs(r - 1.0) < width)

    def describe(self) -> dict:
        return {
            "id": self.example_id,
            "k": self.k,
            "jump": self.jump,
            "sigma": self.sigma,
            "tilt": self.tilt,
        }


def make_example(example_id: str, **params) -> ExampleField:
    """
    Instantiate an example by id.

    :param example_id: one of :data:`EXAMPLES`
    :param params: ``epsilon`` (logloglinear, sqrtlog amplitude), ``k``,
        ``jump`` (radial examples)
    :raises ParameterError: unknown id or inadmissible parameters
    """
    if example_id == "logloglinear":
        return LogLogLinear(params.get("epsilon", 1.0))
    if example_id == "sqrtlog":
        return SqrtLog(params.get("epsilon", 1.0))
    if example_id == "radial_k":
        return RadialK(params.get("k", 3), 0.0)
    if example_id == "radial_k_cylinder":
        return RadialK(params.get("k", 3), params.get("jump", 1.0))
    raise ParameterError(
        f"unknown example {example_id!r}", section="example", key="id"
    )


@attrs.define(frozen=True, eq=False)
class ExampleBuild:
    example: ExampleField
    field: ScalarField
    gradient: VectorField
    hessian: TensorField


def build_example(example, domain: DiscreteDomain, **params) -> ExampleBuild:
    """
    Nodal field of an example together with its analytic derivatives.
    Derivatives are non-finite on the singular set.
    """
    if isinstance(example, str):
        example = make_example(example, **params)
    mask = domain.available
    parts = [np.zeros(domain.shape) for _ in range(6)]
    derivatives = example.derivatives(domain.x[mask], domain.y[mask])
    for part, values in zip(parts, derivatives):
        part[mask] = values
    return ExampleBuild(
        example=example,
        field=ScalarField(domain, parts[0]),
        gradient=VectorField(domain, parts[1], parts[2]),
        hessian=TensorField(domain, parts[3], parts[4], parts[5]),
    )


# ---------------------
# Divergence diagnostics
# ---------------------


def radial_oracle(
    example: ExampleField,
    name: str,
    lower: float,
    upper: float,
    p: float = 1.0,
) -> float:
    """
    ``int_{lower <= r <= upper} f dx`` by adaptive quadrature in ``r`` and
    a periodic trapezoid in the angle.
    """
    theta = 2.0 * math.pi * np.arange(_THETA_POINTS) / _THETA_POINTS
    cos, sin = np.cos(theta), np.sin(theta)

    def ring(r):
        values = example.quantity(name, r * cos, r * sin, p)
        return 2.0 * math.pi * r * float(np.mean(values))

    points = [b for b in example.breakpoints() if lower < b < upper]
    value, _ = scipy_integrate.quad(
        ring, lower, upper, points=points or None, limit=400
    )
    return value


@attrs.define(frozen=True)
class DivergenceTable:
    example: dict
    exponents: tuple
    rows: list

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])


def _oracle_excluded(example, name, delta, p=1.0):
    if isinstance(example, RadialK):
        inside = radial_oracle(example, name, 0.0, 1.0 - delta, p)
        return inside + radial_oracle(
            example, name, 1.0 + delta, example.outer_radius, p
        )
    return radial_oracle(example, name, delta, example.outer_radius, p)


def derivative_agreement(
    example: ExampleField, domain: DiscreteDomain, delta: float
) -> tuple:
    """
    Maximal gaps between the finite-difference gradient and Hessian of the
    nodal field and the analytic partials, over
    :meth:`ExampleField.smooth_region`.

    :return: ``(grad_error, hess_error)``, ``nan`` on an empty region
    """
    reference = example.reference()
    build = build_example(reference, domain)
    region = reference.smooth_region(domain, delta) & domain.available
    if not region.any():
        return math.nan, math.nan
    grad = gradient(build.field)
    hess = hessian(build.field)
    grad_gap = np.maximum(
        np.abs(grad.x - build.gradient.x), np.abs(grad.y - build.gradient.y)
    )
    hess_gap = np.maximum.reduce(
        [
            np.abs(hess.xx - build.hessian.xx),
            np.abs(hess.xy - build.hessian.xy),
            np.abs(hess.yy - build.hessian.yy),
        ]
    )
    return float(grad_gap[region].max()), float(hess_gap[region].max())


def divergence_diagnostics(
    example: ExampleField,
    deltas,
    domain: DiscreteDomain,
    exponents=(1.0,),
    oracle: bool = False,
) -> DivergenceTable:
    """
    Integrals of ``|grad u|^p``, ``|D^2u|^2`` and the bending density over
    the domain minus a ``delta`` neighbourhood of the singular set, from
    the analytic derivatives. Each row also carries the
    :func:`derivative_agreement` gaps at that ``delta``.

    :param deltas: strictly decreasing schedule
    :param oracle: also evaluate every integral by 1-D quadrature
    :raises ParameterError: schedule not strictly decreasing
    :raises ResolutionError: a ``delta`` below four grid steps
    """
    deltas = [float(d) for d in deltas]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ParameterError(
            f"delta schedule must decrease strictly, got {deltas}",
            section="example",
            key="deltas",
        )
    step = domain.spacing[0]
    for delta in deltas:
        if delta < 4.0 * step:
            raise ResolutionError(
                f"delta={delta} is below 4 grid steps ({4.0 * step:.4g})",
                section="example",
                key="deltas",
            )
    mask = domain.available
    x, y = domain.x[mask], domain.y[mask]

    def nodal(name, p=1.0):
        values = np.zeros(domain.shape)
        with np.errstate(all="ignore"):
            values[mask] = example.quantity(name, x, y, p)
        return values

    grads = {p: nodal("grad_p", p) for p in exponents}
    hess2 = nodal("hess2")
    bending = nodal("bending")
    rows = []
    for delta in deltas:
        weights = example.excluded(domain, delta)
        keep = weights > 0
        row = {"delta": delta}
        for p, values in grads.items():
            row[f"grad_p{p:g}"] = float(np.sum(weights[keep] * values[keep]))
        row["hess2"] = float(np.sum(weights[keep] * hess2[keep]))
        row["w0"] = float(np.sum(weights[keep] * bending[keep]))
        row["grad_error"], row["hess_error"] = derivative_agreement(
            example, domain, delta
        )
        if oracle:
            for p in exponents:
                row[f"oracle_grad_p{p:g}"] = _oracle_excluded(
                    example, "grad_p", delta, p
                )
            row["oracle_hess2"] = _oracle_excluded(example, "hess2", delta)
            row["oracle_w0"] = _oracle_excluded(example, "bending", delta)
        logger.debug(f"{example.example_id} delta={delta}: {row}")
        rows.append(row)
    return DivergenceTable(
        example=example.describe(), exponents=tuple(exponents), rows=rows
    )


# ----------------------
# Approximating sequences
# ----------------------


def sequence_sigma(sigma0: float, j: int) -> float:
    """Smoothing scale ``sigma0 2^-j``."""
    if j < 1:
        raise ParameterError(
            f"sequence index must be >= 1, got {j}",
            section="relax",
            key="members",
        )
    return sigma0 * 2.0 ** (-j)


def mollified_sequence(
    target: ExampleField,
    j: int,
    domain: DiscreteDomain,
    sigma0: float = 0.05,
) -> ScalarField:
    """
    Member ``j`` of the smooth approximating sequence of ``target`` on
    ``domain``; boundary values equal those of the target.

    :raises ResolutionError: if ``sigma_j`` is below four grid steps
    """
    sigma = sequence_sigma(sigma0, j)
    step = domain.spacing[0]
    if sigma < 4.0 * step:
        raise ResolutionError(
            f"sigma_{j}={sigma:.4g} is below 4 grid steps ({4.0 * step:.4g})",
            section="relax",
            key="sigma0",
        )
    member = target.approximant(sigma)
    logger.debug(f"sequence member {j}: {member.describe()}")
    return member.field(domain)


# ----------------------
# Smooth reference corpus
# ----------------------


@attrs.define(frozen=True, eq=False)
class CorpusEntry:
    """A smooth field and the boundary data matching its trace, if any."""

    name: str
    field: ScalarField
    data: BoundaryData | None


def _outer_radius(domain: DiscreteDomain) -> float:
    if "radius" in domain.params:
        return domain.params["radius"]
    return 0.5 * math.hypot(domain.params["width"], domain.params["height"])


def _relative_coordinates(domain: DiscreteDomain) -> tuple:
    if domain.shape_kind == "rectangle":
        x0, y0 = domain.params["origin"]
        return (
            (domain.x - x0) / domain.params["width"],
            (domain.y - y0) / domain.params["height"],
        )
    cx, cy = domain.center
    return domain.x - cx, domain.y - cy


def bump(domain: DiscreteDomain, amplitude: float = 1.0) -> ScalarField:
    """Smooth bump vanishing to second order on the boundary."""
    a, b = _relative_coordinates(domain)
    if domain.shape_kind == "rectangle":
        values = (16.0 * a * (1.0 - a) * b * (1.0 - b)) ** 2
    elif domain.shape_kind == "annulus":
        inner = domain.params["inner_radius"]
        outer = domain.params["radius"]
        r = np.hypot(a, b)
        half = 0.5 * (outer - inner)
        values = ((r - inner) * (outer - r) / half**2) ** 2
    else:
        values = (1.0 - (a**2 + b**2) / domain.params["radius"] ** 2) ** 2
    return ScalarField.from_values(domain, amplitude * values)


def random_smooth_field(
    domain: DiscreteDomain,
    rng: np.random.Generator,
    modes: int = 3,
    amplitude: float = 0.3,
) -> ScalarField:
    """Bump times a random trigonometric polynomial; clamped to zero data."""
    a, b = _relative_coordinates(domain)
    scale = 1.0 if domain.shape_kind == "rectangle" else _outer_radius(domain)
    coeffs = rng.normal(size=(modes, modes, 2)) / (
        1.0 + np.add.outer(np.arange(modes), np.arange(modes))[..., None] ** 2
    )
    values = np.zeros(domain.shape)
    for i in range(modes):
        for j in range(modes):
            phase = math.pi * (i * a + j * b) / scale
            values += coeffs[i, j, 0] * np.cos(phase)
            values += coeffs[i, j, 1] * np.sin(phase)
    return bump(domain, amplitude) * values


def random_smooth_fields(
    domain: DiscreteDomain, count: int, seed: int = 0, **kwargs
) -> list:
    """``count`` independent seeded fields, one generator stream each."""
    streams = np.random.SeedSequence(seed).spawn(count)
    return [
        random_smooth_field(domain, np.random.default_rng(stream), **kwargs)
        for stream in streams
    ]


def smooth_corpus(domain: DiscreteDomain, seed: int = 0) -> list:
    """
    Smooth reference fields: zero, affine, sphere cap, parabolic cylinder
    and a seeded Fourier bump.
    """
    center = domain.center
    sphere_radius = 2.0 * _outer_radius(domain)
    affine = BoundaryData("affine", slope_x=0.3, slope_y=-0.2, offset=0.1)
    cap = BoundaryData(
        "sphere_cap", sphere_radius=sphere_radius, center=center
    )
    rng = np.random.default_rng(seed)
    return [
        CorpusEntry("zero", ScalarField.constant(domain, 0.0), BoundaryData()),
        CorpusEntry("affine", affine.field(domain), affine),
        CorpusEntry("sphere_cap", cap.field(domain), cap),
        CorpusEntry(
            "parabolic",
            ScalarField.from_function(
                domain, lambda x, y: 0.5 * (x - center[0]) ** 2
            ),
            None,
        ),
        CorpusEntry(
            "fourier", random_smooth_field(domain, rng), BoundaryData()
        ),
    ]


def l1_to_target(field: ScalarField, target: ExampleField) -> float:
    """``||u - target||_L1`` with the target evaluated at the nodes."""
    reference = target.field(field.domain)
    return integrate(np.abs(field.values - reference.values), field.domain)
