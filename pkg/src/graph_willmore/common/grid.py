# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Structured grids over planar domains, nodal fields, finite-difference
derivative operators and quadrature.

Two grid flavours are supported:

* ``cartesian``: uniform nodes on the bounding box, nodes outside the
  domain (or inside the excision ball) are exterior, cut cells get their
  area fraction as quadrature weight;
* ``polar``: nodes on rings around the domain centre (disk and annulus
  only). A disk uses a staggered pole, ``r_i = (i - 1/2) dr``, so no node
  sits on the origin; values across the pole are read from the opposite
  half turn, ``u(-r, theta) = u(r, theta + pi)``.

All arrays are indexed ``[axis0, axis1]``: ``(x, y)`` on cartesian grids
and ``(r, theta)`` on polar grids. Field values at exterior nodes are
stored as zero and never enter a stencil.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from typing import Callable

import attrs
import numpy as np

from graph_willmore.errors import ConfigurationError, NumericalFailure

# pylint: disable=logging-fstring-interpolation

__all__ = [
    "NodeClass",
    "DiscreteDomain",
    "ScalarField",
    "VectorField",
    "TensorField",
    "gradient",
    "hessian",
    "divergence",
    "cartesian_partials",
    "integrate",
    "l1_distance",
    "h1_seminorm",
    "h1_norm",
]

logger = logging.getLogger(__name__)

SHAPES = ("rectangle", "disk", "annulus")
MODES = ("cartesian", "polar")

_PAD = 3
_SUBSAMPLES = 8
_EPS = 1e-12


class NodeClass(enum.IntEnum):
    """Classification of grid nodes."""

    EXTERIOR = 0
    BOUNDARY = 1
    INTERIOR = 2


def shift_array(
    values: np.ndarray,
    axis: int,
    offset: int,
    fill,
    periodic: bool = False,
    pole: bool = False,
) -> np.ndarray:
    """
    Return ``b`` with ``b[i] = values[i + offset]`` along ``axis``.

    :param values: 2-D array
    :param axis: 0 or 1
    :param offset: stencil offset, ``|offset| <= 3``
    :param fill: value used outside the array
    :param periodic: wrap around (polar angle axis)
    :param pole: read negative indices across the pole (polar radial axis)
    :return: the shifted array
    """
    if offset == 0:
        return values
    if periodic:
        return np.roll(values, -offset, axis=axis)
    count = values.shape[axis]
    moved = np.moveaxis(values, axis, 0)
    pad_shape = (_PAD,) + moved.shape[1:]
    tail = np.full(pad_shape, fill, dtype=values.dtype)
    if pole:
        head = np.roll(moved[_PAD - 1 :: -1], moved.shape[1] // 2, axis=1)
    else:
        head = np.full(pad_shape, fill, dtype=values.dtype)
    extended = np.concatenate([head, moved, tail], axis=0)
    out = extended[_PAD + offset : _PAD + offset + count]
    return np.moveaxis(out, 0, axis)


def _prune_and_classify(
    available: np.ndarray, shift: Callable
) -> np.ndarray:
    """
    Drop nodes without a second-order first-derivative stencil along both
    axes (repeatedly) and classify the rest.

    :return: int8 array of :class:`NodeClass` values
    """
    avail = available.copy()
    while True:
        keep = avail.copy()
        for axis in (0, 1):
            p1 = shift(avail, axis, 1, False)
            m1 = shift(avail, axis, -1, False)
            p2 = shift(avail, axis, 2, False)
            m2 = shift(avail, axis, -2, False)
            keep &= (p1 & m1) | (p1 & p2) | (m1 & m2)
        if np.array_equal(keep, avail):
            break
        avail = keep
    if not avail.any():
        raise ConfigurationError(
            "domain too small for stencil: no node has a full "
            "second-order stencil"
        )
    interior = avail.copy()
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            interior &= shift(shift(avail, 0, da, False), 1, db, False)
    return np.where(
        interior,
        NodeClass.INTERIOR,
        np.where(avail, NodeClass.BOUNDARY, NodeClass.EXTERIOR),
    ).astype(np.int8)


@attrs.define(frozen=True)
class _FirstPlan:
    central: np.ndarray
    forward: np.ndarray
    backward: np.ndarray


@attrs.define(frozen=True)
class _SecondPlan:
    central: np.ndarray
    forward: np.ndarray
    backward: np.ndarray
    forward_low: np.ndarray
    backward_low: np.ndarray

    @property
    def fallbacks(self) -> int:
        return int(self.forward_low.sum() + self.backward_low.sum())


@attrs.define(frozen=True, slots=False, eq=False)
class DiscreteDomain:
    """
    Structured grid over a planar domain.

    Instances are immutable and safe to share between threads. Use the
    :meth:`rectangle`, :meth:`disk`, :meth:`annulus` or :meth:`build`
    constructors rather than the raw initializer.
    """

    shape_kind: str
    mode: str
    h: float
    spacing: tuple
    params: dict
    coords: tuple
    x: np.ndarray
    y: np.ndarray
    node_class: np.ndarray
    weights: np.ndarray
    excision: float = 0.0
    singular_point: tuple = (0.0, 0.0)
    periodic: bool = False
    pole: bool = False
    ring_bounds: tuple | None = None

    # ------------
    # Constructors
    # ------------

    @classmethod
    def build(
        cls,
        shape: str,
        h: float,
        mode: str = "cartesian",
        **params,
    ) -> DiscreteDomain:
        """
        Build a domain from a shape name.

        :param shape: one of ``rectangle``, ``disk``, ``annulus``
        :param h: node spacing
        :param mode: ``cartesian`` or ``polar``
        :param params: geometric parameters of the shape
        :raises ConfigurationError: unknown shape/mode or bad parameters
        """
        if shape not in SHAPES:
            raise ConfigurationError(f"unknown domain shape {shape!r}")
        if mode not in MODES:
            raise ConfigurationError(f"unknown grid mode {mode!r}")
        if shape == "rectangle":
            if mode == "polar":
                raise ConfigurationError(
                    "polar mode is only available for disk and annulus"
                )
            return cls.rectangle(h=h, **params)
        if shape == "disk":
            return cls.disk(h=h, mode=mode, **params)
        return cls.annulus(h=h, mode=mode, **params)

    @classmethod
    def rectangle(
        cls,
        width: float = 1.0,
        height: float = 1.0,
        h: float = 1.0 / 32,
        origin: tuple = (0.0, 0.0),
    ) -> DiscreteDomain:
        """Rectangle ``[x0, x0 + width] x [y0, y0 + height]``."""
        _check_positive(h=h, width=width, height=height)
        counts = []
        for length in (width, height):
            count = int(round(length / h))
            if count < 3 or abs(count * h - length) > 1e-9 * length:
                raise ConfigurationError(
                    f"rectangle side {length} is not a multiple of h={h} "
                    "with at least 3 cells"
                )
            counts.append(count)
        xs = origin[0] + h * np.arange(counts[0] + 1)
        ys = origin[1] + h * np.arange(counts[1] + 1)
        params = {"width": width, "height": height, "origin": tuple(origin)}
        middle = (origin[0] + 0.5 * width, origin[1] + 0.5 * height)
        return cls._cartesian("rectangle", h, xs, ys, params, 0.0, middle)

    @classmethod
    def disk(
        cls,
        radius: float = 1.0,
        h: float = 1.0 / 32,
        mode: str = "cartesian",
        excision: float = 0.0,
        center: tuple = (0.0, 0.0),
        n_theta: int | None = None,
    ) -> DiscreteDomain:
        """Disk of ``radius`` around ``center``, optionally excised."""
        _check_positive(h=h, radius=radius)
        if excision < 0 or excision >= radius:
            raise ConfigurationError(
                f"excision radius {excision} outside [0, {radius})"
            )
        params = {"radius": radius, "center": tuple(center)}
        if mode == "polar":
            count = max(int(round(radius / h + 0.5)), 4)
            dr = radius / (count - 0.5)
            radii = (np.arange(1, count + 1) - 0.5) * dr
            return cls._polar(
                "disk", h, radii, dr, params, excision, center, n_theta, True
            )
        half = int(math.ceil(radius / h)) + 1
        xs = center[0] + h * np.arange(-half, half + 1)
        ys = center[1] + h * np.arange(-half, half + 1)
        return cls._cartesian("disk", h, xs, ys, params, excision, center)

    @classmethod
    def annulus(
        cls,
        inner_radius: float = 0.5,
        radius: float = 1.0,
        h: float = 1.0 / 32,
        mode: str = "cartesian",
        center: tuple = (0.0, 0.0),
        n_theta: int | None = None,
    ) -> DiscreteDomain:
        """Annulus ``inner_radius <= |x - center| <= radius``."""
        _check_positive(h=h, radius=radius, inner_radius=inner_radius)
        if inner_radius >= radius:
            raise ConfigurationError(
                f"inner radius {inner_radius} must be below radius {radius}"
            )
        params = {
            "radius": radius,
            "inner_radius": inner_radius,
            "center": tuple(center),
        }
        if mode == "polar":
            count = max(int(round((radius - inner_radius) / h)), 4)
            dr = (radius - inner_radius) / count
            radii = inner_radius + dr * np.arange(count + 1)
            return cls._polar(
                "annulus", h, radii, dr, params, 0.0, center, n_theta, False
            )
        half = int(math.ceil(radius / h)) + 1
        xs = center[0] + h * np.arange(-half, half + 1)
        ys = center[1] + h * np.arange(-half, half + 1)
        return cls._cartesian("annulus", h, xs, ys, params, 0.0, center)

    @classmethod
    def _cartesian(cls, kind, h, xs, ys, params, excision, singular):
        x, y = np.meshgrid(xs, ys, indexing="ij")
        inside = _shape_inside(kind, params, excision, singular, x, y)
        node_class = _prune_and_classify(inside, shift_array)
        available = node_class != NodeClass.EXTERIOR
        fraction = np.ones_like(x)
        near = available & (
            _shape_distance(kind, params, excision, singular, x, y)
            < h * (0.5 * math.sqrt(2.0) + 0.01)
        )
        if near.any():
            offsets = (np.arange(_SUBSAMPLES) + 0.5) / _SUBSAMPLES - 0.5
            ox, oy = np.meshgrid(offsets, offsets, indexing="ij")
            px = x[near][:, None] + h * ox.ravel()[None, :]
            py = y[near][:, None] + h * oy.ravel()[None, :]
            sub_inside = _shape_inside(
                kind, params, excision, singular, px, py
            )
            fraction[near] = sub_inside.mean(axis=1)
        weights = np.where(available, h * h * fraction, 0.0)
        domain = cls(
            shape_kind=kind,
            mode="cartesian",
            h=float(h),
            spacing=(float(h), float(h)),
            params=params,
            coords=(x, y),
            x=x,
            y=y,
            node_class=node_class,
            weights=weights,
            excision=float(excision),
            singular_point=tuple(singular),
        )
        logger.debug(
            f"cartesian {kind} h={h}: {int(available.sum())} nodes, "
            f"area {domain.area:.6f}"
        )
        return domain

    @classmethod
    def _polar(
        cls, kind, h, radii, dr, params, excision, center, n_theta, pole
    ):
        outer = params["radius"]
        if n_theta is None:
            n_theta = max(16, 2 * int(math.ceil(math.pi * outer / h)))
        if n_theta < 8 or n_theta % 2:
            raise ConfigurationError(
                f"n_theta must be even and at least 8, got {n_theta}"
            )
        thetas = 2.0 * math.pi * np.arange(n_theta) / n_theta
        r, theta = np.meshgrid(radii, thetas, indexing="ij")
        x = center[0] + r * np.cos(theta)
        y = center[1] + r * np.sin(theta)

        def shift(values, axis, offset, fill):
            return shift_array(
                values, axis, offset, fill, axis == 1, pole and axis == 0
            )

        inside = r >= excision
        node_class = _prune_and_classify(inside, shift)
        available = node_class != NodeClass.EXTERIOR
        lower_edge = max(params.get("inner_radius", 0.0), excision)
        inner_ok = shift(available, 0, -1, False)
        outer_ok = shift(available, 0, 1, False)
        lo = np.where(inner_ok, r - 0.5 * dr, lower_edge)
        hi = np.where(outer_ok, r + 0.5 * dr, outer)
        dtheta = 2.0 * math.pi / n_theta
        weights = np.where(available, 0.5 * dtheta * (hi**2 - lo**2), 0.0)
        return cls(
            shape_kind=kind,
            mode="polar",
            h=float(h),
            spacing=(float(dr), float(dtheta)),
            params=params,
            coords=(r, theta),
            x=x,
            y=y,
            node_class=node_class,
            weights=weights,
            excision=float(excision),
            singular_point=tuple(center),
            periodic=True,
            pole=pole,
            ring_bounds=(lo, hi),
        )

    # ---------------
    # General methods
    # ---------------

    def shift(self, values: np.ndarray, axis: int, offset: int, fill=0.0):
        """Grid-aware :func:`shift_array` (periodic angle, pole ghosts)."""
        return shift_array(
            values,
            axis,
            offset,
            fill,
            self.periodic and axis == 1,
            self.pole and axis == 0,
        )

    @functools.cached_property
    def available(self) -> np.ndarray:
        """Mask of non-exterior nodes."""
        return self.node_class != NodeClass.EXTERIOR

    @functools.cached_property
    def interior(self) -> np.ndarray:
        return self.node_class == NodeClass.INTERIOR

    @functools.cached_property
    def boundary_adjacent(self) -> np.ndarray:
        return self.node_class == NodeClass.BOUNDARY

    @property
    def shape(self) -> tuple:
        return self.node_class.shape

    @property
    def area(self) -> float:
        """Sum of the quadrature weights."""
        return float(np.sum(self.weights))

    @property
    def center(self) -> tuple:
        return tuple(self.params.get("center", self.singular_point))

    @property
    def euler_characteristic(self) -> int:
        return 0 if self.shape_kind == "annulus" else 1

    @property
    def inradius(self) -> float:
        if self.shape_kind == "disk":
            return self.params["radius"]
        if self.shape_kind == "annulus":
            return 0.5 * (self.params["radius"] - self.params["inner_radius"])
        return 0.5 * min(self.params["width"], self.params["height"])

    def analytic_area(self) -> float:
        """Area of the domain minus the excision ball."""
        if self.shape_kind == "rectangle":
            return self.params["width"] * self.params["height"]
        outer = math.pi * self.params["radius"] ** 2
        inner = math.pi * self.params.get("inner_radius", 0.0) ** 2
        return outer - inner - math.pi * self.excision**2

    def contains(self, x, y) -> np.ndarray:
        """Closed membership test of the continuous domain (no excision)."""
        return _shape_inside(
            self.shape_kind, self.params, 0.0, self.singular_point, x, y
        )

    def polar_coordinates(self) -> tuple:
        """``(r, theta)`` of every node about the domain centre."""
        if self.mode == "polar":
            return self.coords
        cx, cy = self.center
        return (
            np.hypot(self.x - cx, self.y - cy),
            np.arctan2(self.y - cy, self.x - cx),
        )

    @functools.cached_property
    def _first_plans(self) -> tuple:
        return tuple(self._first_plan(axis) for axis in (0, 1))

    @functools.cached_property
    def _second_plans(self) -> tuple:
        plans = tuple(self._second_plan(axis) for axis in (0, 1))
        fallbacks = sum(plan.fallbacks for plan in plans)
        if fallbacks:
            logger.warning(
                f"{self.shape_kind} h={self.h}: {fallbacks} second-derivative "
                "stencils fell back to first order"
            )
        return plans

    def _first_plan(self, axis: int) -> _FirstPlan:
        avail = self.available
        p1, m1, p2, m2 = (
            self.shift(avail, axis, k, False) for k in (1, -1, 2, -2)
        )
        central = avail & p1 & m1
        forward = avail & ~central & p1 & p2
        backward = avail & ~central & ~forward & m1 & m2
        missing = avail & ~(central | forward | backward)
        if missing.any():
            raise ConfigurationError(
                f"domain too small for stencil along axis {axis}: "
                f"{int(missing.sum())} nodes without support"
            )
        return _FirstPlan(central, forward, backward)

    def _second_plan(self, axis: int) -> _SecondPlan:
        avail = self.available
        p1, m1, p2, m2, p3, m3 = (
            self.shift(avail, axis, k, False) for k in (1, -1, 2, -2, 3, -3)
        )
        central = avail & p1 & m1
        forward = avail & ~central & p1 & p2 & p3
        backward = avail & ~central & ~forward & m1 & m2 & m3
        rest = avail & ~(central | forward | backward)
        forward_low = rest & p1 & p2
        backward_low = rest & ~forward_low & m1 & m2
        return _SecondPlan(
            central, forward, backward, forward_low, backward_low
        )

    def stencil_report(self) -> dict:
        """Node counts and first-order fallbacks, for reports."""
        return {
            "mode": self.mode,
            "shape": self.shape_kind,
            "h": self.h,
            "spacing": list(self.spacing),
            "nodes": int(self.available.sum()),
            "interior_nodes": int(self.interior.sum()),
            "boundary_nodes": int(self.boundary_adjacent.sum()),
            "second_order_fallbacks": int(
                sum(plan.fallbacks for plan in self._second_plans)
            ),
            "excision": self.excision,
            "area": self.area,
        }

    def interior_depth(self, depth: int) -> np.ndarray:
        """Interior nodes surrounded by ``depth`` layers of interior nodes."""
        mask = self.interior.copy()
        for _ in range(depth):
            eroded = mask.copy()
            for da in (-1, 0, 1):
                for db in (-1, 0, 1):
                    eroded &= self.shift(
                        self.shift(mask, 0, da, False), 1, db, False
                    )
            mask = eroded
        return mask

    def restrict(self, removed: np.ndarray) -> DiscreteDomain:
        """
        Return a domain in which ``removed`` nodes are exterior.

        Remaining nodes keep their quadrature weights.
        """
        node_class = _prune_and_classify(
            self.available & ~removed, self.shift
        )
        weights = np.where(
            node_class != NodeClass.EXTERIOR, self.weights, 0.0
        )
        return attrs.evolve(self, node_class=node_class, weights=weights)

    def radial_region(
        self, lower: float = 0.0, upper: float = math.inf
    ) -> np.ndarray:
        """
        Quadrature weights restricted to ``lower <= r <= upper`` about the
        singular point, with partial overlap for polar ring cells.
        """
        sx, sy = self.singular_point
        r = np.hypot(self.x - sx, self.y - sy)
        if self.mode != "polar":
            return np.where((r >= lower) & (r <= upper), self.weights, 0.0)
        cell_lo, cell_hi = self.ring_bounds
        lo = np.clip(cell_lo, lower, upper)
        hi = np.clip(cell_hi, lower, upper)
        dtheta = self.spacing[1]
        return np.where(
            self.available & (hi > lo), 0.5 * dtheta * (hi**2 - lo**2), 0.0
        )


def _check_positive(**values) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value}")


def _shape_inside(kind, params, excision, singular, x, y):
    if kind == "rectangle":
        x0, y0 = params["origin"]
        tol = _EPS * max(params["width"], params["height"], 1.0)
        inside = (
            (x >= x0 - tol)
            & (x <= x0 + params["width"] + tol)
            & (y >= y0 - tol)
            & (y <= y0 + params["height"] + tol)
        )
    else:
        cx, cy = params["center"]
        d = np.hypot(x - cx, y - cy)
        inside = d <= params["radius"] * (1.0 + _EPS)
        if kind == "annulus":
            inside &= d >= params["inner_radius"] * (1.0 - _EPS)
    if excision > 0:
        inside &= np.hypot(x - singular[0], y - singular[1]) >= excision
    return inside


def _shape_distance(kind, params, excision, singular, x, y):
    if kind == "rectangle":
        x0, y0 = params["origin"]
        dist = np.minimum.reduce(
            [
                np.abs(x - x0),
                np.abs(x0 + params["width"] - x),
                np.abs(y - y0),
                np.abs(y0 + params["height"] - y),
            ]
        )
    else:
        cx, cy = params["center"]
        d = np.hypot(x - cx, y - cy)
        dist = np.abs(d - params["radius"])
        if kind == "annulus":
            dist = np.minimum(dist, np.abs(d - params["inner_radius"]))
    if excision > 0:
        dist = np.minimum(
            dist,
            np.abs(np.hypot(x - singular[0], y - singular[1]) - excision),
        )
    return dist


# ------
# Fields
# ------


def _masked(domain: DiscreteDomain, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != domain.shape:
        values = np.broadcast_to(values, domain.shape)
    return np.where(domain.available, values, 0.0)


@attrs.define(frozen=True, eq=False)
class ScalarField:
    """One real value per non-exterior node (exterior entries are zero)."""

    domain: DiscreteDomain
    values: np.ndarray

    def __attrs_post_init__(self):
        if np.shape(self.values) != self.domain.shape:
            raise ValueError(
                f"field shape {np.shape(self.values)} does not match "
                f"domain shape {self.domain.shape}"
            )

    @classmethod
    def from_values(cls, domain: DiscreteDomain, values) -> ScalarField:
        return cls(domain, _masked(domain, values))

    @classmethod
    def from_function(cls, domain: DiscreteDomain, func) -> ScalarField:
        """Evaluate ``func(x, y)`` at the non-exterior nodes."""
        values = np.zeros(domain.shape)
        mask = domain.available
        values[mask] = func(domain.x[mask], domain.y[mask])
        return cls(domain, values)

    @classmethod
    def constant(cls, domain: DiscreteDomain, value: float) -> ScalarField:
        return cls.from_values(domain, np.full(domain.shape, float(value)))

    def with_values(self, values) -> ScalarField:
        return ScalarField.from_values(self.domain, values)

    def map(self, func) -> ScalarField:
        """Apply a ufunc-like ``func`` to the non-exterior values."""
        values = np.zeros(self.domain.shape)
        mask = self.domain.available
        values[mask] = func(self.values[mask])
        return ScalarField(self.domain, values)

    def node_values(self, region: np.ndarray | None = None) -> np.ndarray:
        mask = self.domain.available
        if region is not None:
            mask = mask & region
        return self.values[mask]

    def max_abs(self, region: np.ndarray | None = None) -> float:
        values = self.node_values(region)
        return float(np.max(np.abs(values))) if values.size else 0.0

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.node_values())))

    def check_finite(self, name: str = "field") -> ScalarField:
        """:raises NumericalFailure: on NaN or Inf at a non-exterior node."""
        if not self.is_finite():
            bad = int(np.sum(~np.isfinite(self.node_values())))
            raise NumericalFailure(
                f"{name} has {bad} non-finite node values",
                {"field": name, "non_finite": bad},
            )
        return self

    def _combine(self, other, op) -> ScalarField:
        if isinstance(other, ScalarField):
            if other.domain is not self.domain:
                raise ValueError("fields live on different domains")
            other = other.values
        return ScalarField.from_values(self.domain, op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.divide)

    def __neg__(self):
        return ScalarField(self.domain, -self.values)


@attrs.define(frozen=True, eq=False)
class VectorField:
    """Cartesian components ``(x, y)`` per node."""

    domain: DiscreteDomain
    x: np.ndarray
    y: np.ndarray

    def norm(self) -> ScalarField:
        return ScalarField(self.domain, np.hypot(self.x, self.y))

    def norm2(self) -> ScalarField:
        return ScalarField(self.domain, self.x**2 + self.y**2)

    def scaled(self, factor: ScalarField | np.ndarray) -> VectorField:
        values = factor.values if isinstance(factor, ScalarField) else factor
        return VectorField(
            self.domain,
            _masked(self.domain, self.x * values),
            _masked(self.domain, self.y * values),
        )

    def component(self, index: int) -> ScalarField:
        return ScalarField(self.domain, self.x if index == 0 else self.y)

    def dot(self, other: VectorField) -> ScalarField:
        return ScalarField(self.domain, self.x * other.x + self.y * other.y)


@attrs.define(frozen=True, eq=False)
class TensorField:
    """Symmetric 2x2 tensor per node, stored as ``xx, xy, yy``."""

    domain: DiscreteDomain
    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray

    def trace(self) -> ScalarField:
        return ScalarField(self.domain, self.xx + self.yy)

    def det(self) -> ScalarField:
        return ScalarField(self.domain, self.xx * self.yy - self.xy**2)

    def norm2(self) -> ScalarField:
        """Squared Frobenius norm."""
        return ScalarField(
            self.domain, self.xx**2 + 2.0 * self.xy**2 + self.yy**2
        )

    def apply(self, vector: VectorField) -> VectorField:
        return VectorField(
            self.domain,
            self.xx * vector.x + self.xy * vector.y,
            self.xy * vector.x + self.yy * vector.y,
        )

    def product_trace(self, other: TensorField) -> ScalarField:
        """``tr(self @ other)``."""
        return ScalarField(
            self.domain,
            self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy,
        )

    def matmul(self, other: TensorField) -> tuple:
        """Entries ``(a, b, c, d)`` of the (non-symmetric) product."""
        return (
            self.xx * other.xx + self.xy * other.xy,
            self.xx * other.xy + self.xy * other.yy,
            self.xy * other.xx + self.yy * other.xy,
            self.xy * other.xy + self.yy * other.yy,
        )


# ---------
# Operators
# ---------


def first_difference(
    domain: DiscreteDomain, values: np.ndarray, axis: int
) -> np.ndarray:
    """Second-order derivative along a grid axis (central or one-sided)."""
    plan = domain._first_plans[axis]  # pylint: disable=protected-access
    step = domain.spacing[axis]
    out = np.zeros(domain.shape)
    p1 = domain.shift(values, axis, 1)
    m1 = domain.shift(values, axis, -1)
    out[plan.central] = ((p1 - m1) / (2.0 * step))[plan.central]
    if plan.forward.any():
        p2 = domain.shift(values, axis, 2)
        forward = (-3.0 * values + 4.0 * p1 - p2) / (2.0 * step)
        out[plan.forward] = forward[plan.forward]
    if plan.backward.any():
        m2 = domain.shift(values, axis, -2)
        backward = (3.0 * values - 4.0 * m1 + m2) / (2.0 * step)
        out[plan.backward] = backward[plan.backward]
    return out


def second_difference(
    domain: DiscreteDomain, values: np.ndarray, axis: int
) -> np.ndarray:
    """Compact second derivative along a grid axis."""
    plan = domain._second_plans[axis]  # pylint: disable=protected-access
    step2 = domain.spacing[axis] ** 2
    out = np.zeros(domain.shape)
    shifted = {k: domain.shift(values, axis, k) for k in (1, -1, 2, -2)}
    central = (shifted[1] - 2.0 * values + shifted[-1]) / step2
    out[plan.central] = central[plan.central]
    if plan.forward.any():
        p3 = domain.shift(values, axis, 3)
        forward = (
            2.0 * values - 5.0 * shifted[1] + 4.0 * shifted[2] - p3
        ) / step2
        out[plan.forward] = forward[plan.forward]
    if plan.backward.any():
        m3 = domain.shift(values, axis, -3)
        backward = (
            2.0 * values - 5.0 * shifted[-1] + 4.0 * shifted[-2] - m3
        ) / step2
        out[plan.backward] = backward[plan.backward]
    if plan.forward_low.any():
        low = (values - 2.0 * shifted[1] + shifted[2]) / step2
        out[plan.forward_low] = low[plan.forward_low]
    if plan.backward_low.any():
        low = (values - 2.0 * shifted[-1] + shifted[-2]) / step2
        out[plan.backward_low] = low[plan.backward_low]
    return out


def cartesian_partials(domain: DiscreteDomain, values: np.ndarray) -> tuple:
    """``(d/dx, d/dy)`` of nodal ``values`` on either grid flavour."""
    if domain.mode == "cartesian":
        return (
            first_difference(domain, values, 0),
            first_difference(domain, values, 1),
        )
    r, theta = domain.coords
    d_r = first_difference(domain, values, 0)
    d_theta = first_difference(domain, values, 1) / r
    cos, sin = np.cos(theta), np.sin(theta)
    mask = domain.available
    return (
        np.where(mask, cos * d_r - sin * d_theta, 0.0),
        np.where(mask, sin * d_r + cos * d_theta, 0.0),
    )


def gradient(u: ScalarField) -> VectorField:
    """
    Discrete gradient.

    Second-order central differences at interior nodes, second-order
    one-sided differences at boundary-adjacent nodes. Exact on quadratics
    on cartesian grids.
    """
    dx, dy = cartesian_partials(u.domain, u.values)
    return VectorField(u.domain, dx, dy)


def hessian(u: ScalarField) -> TensorField:
    """
    Discrete Hessian, symmetric by construction.

    Cartesian grids use compact second differences on the diagonal and the
    centred cross stencil (the composition of first differences) for the
    mixed entry; polar grids compose the cartesian first partials.
    """
    domain = u.domain
    if domain.mode == "cartesian":
        xx = second_difference(domain, u.values, 0)
        yy = second_difference(domain, u.values, 1)
        ux = first_difference(domain, u.values, 0)
        uy = first_difference(domain, u.values, 1)
        xy = 0.5 * (
            first_difference(domain, ux, 1) + first_difference(domain, uy, 0)
        )
    else:
        ux, uy = cartesian_partials(domain, u.values)
        xx, xy_a = cartesian_partials(domain, ux)
        xy_b, yy = cartesian_partials(domain, uy)
        xy = 0.5 * (xy_a + xy_b)
    mask = domain.available
    return TensorField(
        domain,
        np.where(mask, xx, 0.0),
        np.where(mask, xy, 0.0),
        np.where(mask, yy, 0.0),
    )


def divergence(field: VectorField) -> ScalarField:
    dx, _ = cartesian_partials(field.domain, field.x)
    _, dy = cartesian_partials(field.domain, field.y)
    return ScalarField.from_values(field.domain, dx + dy)


def integrate(
    f: ScalarField | np.ndarray,
    domain: DiscreteDomain | None = None,
    region: np.ndarray | None = None,
) -> float:
    """
    Midpoint quadrature ``sum(weights * f)``.

    :param f: field (or raw nodal array together with ``domain``)
    :param domain: defaults to the field's domain
    :param region: optional mask or weight array replacing the weights
    :return: the integral over the non-exterior nodes
    """
    if isinstance(f, ScalarField):
        domain = domain or f.domain
        values = f.values
    else:
        values = np.asarray(f, dtype=float)
    if domain is None:
        raise ValueError("integrate needs a domain for raw arrays")
    weights = domain.weights
    if region is not None:
        region = np.asarray(region)
        weights = weights * region if region.dtype == bool else region
    return float(np.sum(np.where(domain.available, weights * values, 0.0)))


def l1_distance(u: ScalarField, v: ScalarField) -> float:
    return integrate(np.abs(u.values - v.values), u.domain)


def h1_seminorm(f: ScalarField) -> float:
    return math.sqrt(max(integrate(gradient(f).norm2()), 0.0))


def h1_norm(f: ScalarField) -> float:
    return math.sqrt(
        max(integrate(f.values**2, f.domain), 0.0) + h1_seminorm(f) ** 2
    )
