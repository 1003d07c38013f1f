# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Diagnostics for sequences of graphs with bounded Willmore energy.

The bounded auxiliary fields ``q = Q^(-5/2)``, ``v = q grad u``,
``g = Q^(-3/2)`` and ``e = u g`` stay controlled in ``H^1`` even when the
gradients of a sequence blow up; the regular part of a limit gradient is
recovered as ``v / q`` where ``q`` does not vanish.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import attrs
import numpy as np

from graph_willmore.common.grid import (
    ScalarField,
    VectorField,
    cartesian_partials,
    gradient,
    h1_norm,
    h1_seminorm,
    hessian,
    integrate,
    l1_distance,
)
from graph_willmore.errors import DegenerateFieldWarning, PreconditionError
from graph_willmore.functionals.energy import (
    willmore,
    willmore_absolutely_continuous,
)
from graph_willmore.geometry.boundary import (
    BoundaryCurve,
    BoundaryData,
    trace_field,
)

# pylint: disable=logging-fstring-interpolation

__all__ = [
    "AuxiliaryFields",
    "RegularGradient",
    "SequenceDiagnostics",
    "LscReport",
    "TraceAttainment",
    "auxiliary_fields",
    "reconstruct_regular_gradient",
    "sequence_diagnostics",
    "lsc_check",
    "boundary_trace_check",
    "steepening_sequence",
]

logger = logging.getLogger(__name__)


@attrs.define(frozen=True, eq=False)
class AuxiliaryFields:
    """Bounded fields of one graph plus their ``H^1`` sizes."""

    u: ScalarField
    q: ScalarField
    v: VectorField
    g: ScalarField
    e: ScalarField
    tolerance: float
    seminorms: dict
    norms: dict
    dq_constant: float
    dv_constant: float

    @property
    def zero_set(self) -> np.ndarray:
        """Nodes where ``q`` is numerically zero."""
        return self.u.domain.available & (self.q.values <= self.tolerance)


def _vector_h1(field: VectorField, seminorm: bool = True) -> float:
    parts = (field.component(0), field.component(1))
    if seminorm:
        return math.sqrt(sum(h1_seminorm(part) ** 2 for part in parts))
    return math.sqrt(sum(h1_norm(part) ** 2 for part in parts))


def auxiliary_fields(
    u: ScalarField, tolerance: float | None = None
) -> AuxiliaryFields:
    """
    Compute ``q, v, g, e`` and their discrete ``H^1`` seminorms and norms.

    The derivative bounds ``|grad q| <= 5/2 |D^2u| / Q^(7/2)`` and
    ``|Dv| <= 7/2 |D^2u| / Q^(5/2)`` are evaluated node by node and the
    largest observed constants reported.

    :param u: nodal height function
    :param tolerance: vanishing threshold for ``q``, default ``h``
    """
    u.check_finite("u")
    domain = u.domain
    grad = gradient(u)
    q_values = np.sqrt(1.0 + grad.x**2 + grad.y**2)
    q = ScalarField.from_values(domain, q_values**-2.5)
    v = VectorField(domain, q.values * grad.x, q.values * grad.y)
    g = ScalarField.from_values(domain, q_values**-1.5)
    e = ScalarField.from_values(domain, u.values * g.values)
    seminorms = {
        "q": h1_seminorm(q),
        "v": _vector_h1(v),
        "g": h1_seminorm(g),
        "e": h1_seminorm(e),
    }
    norms = {
        "q": h1_norm(q),
        "v": _vector_h1(v, seminorm=False),
        "g": h1_norm(g),
        "e": h1_norm(e),
    }
    hess_norm = np.sqrt(hessian(u).norm2().values)
    active = domain.available & (hess_norm > 1e-8 * max(hess_norm.max(), 1.0))
    dq = gradient(q).norm().values
    vx_x, vx_y = cartesian_partials(domain, v.x)
    vy_x, vy_y = cartesian_partials(domain, v.y)
    dv = np.sqrt(vx_x**2 + vx_y**2 + vy_x**2 + vy_y**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        dq_ratio = np.where(active, dq * q_values**3.5 / hess_norm, 0.0)
        dv_ratio = np.where(active, dv * q_values**2.5 / hess_norm, 0.0)
    return AuxiliaryFields(
        u=u,
        q=q,
        v=v,
        g=g,
        e=e,
        tolerance=domain.h if tolerance is None else tolerance,
        seminorms=seminorms,
        norms=norms,
        dq_constant=float(dq_ratio.max()) if active.any() else 0.0,
        dv_constant=float(dv_ratio.max()) if active.any() else 0.0,
    )


@attrs.define(frozen=True, eq=False)
class RegularGradient:
    """``grad^a u`` (NaN where undefined) and ``Q^a``."""

    gradient: VectorField
    q_a: ScalarField
    undefined: np.ndarray

    @property
    def undefined_fraction(self) -> float:
        domain = self.gradient.domain
        return float(self.undefined.sum() / max(domain.available.sum(), 1))


def reconstruct_regular_gradient(aux: AuxiliaryFields) -> RegularGradient:
    """
    ``grad^a u = v / q`` where ``q > tolerance``.

    Emits :class:`DegenerateFieldWarning` when more than half of the nodes
    are undefined.
    """
    domain = aux.u.domain
    defined = domain.available & (aux.q.values > aux.tolerance)
    with np.errstate(divide="ignore", invalid="ignore"):
        gx = np.where(defined, aux.v.x / aux.q.values, np.nan)
        gy = np.where(defined, aux.v.y / aux.q.values, np.nan)
    q_a = np.where(defined, np.sqrt(1.0 + gx**2 + gy**2), np.nan)
    undefined = domain.available & ~defined
    result = RegularGradient(
        gradient=VectorField(domain, gx, gy),
        q_a=ScalarField(domain, np.where(domain.available, q_a, 0.0)),
        undefined=undefined,
    )
    if result.undefined_fraction > 0.5:
        message = (
            f"regular gradient undefined on {result.undefined_fraction:.0%} "
            f"of the nodes (q <= {aux.tolerance:.3g})"
        )
        logger.warning(message)
        warnings.warn(message, DegenerateFieldWarning, stacklevel=2)
    return result


@attrs.define(frozen=True)
class SequenceDiagnostics:
    """One row per sequence member, in sequence order."""

    rows: list

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


def _member_row(index, member, limit, gamma):
    report = willmore(member, gamma)
    aux = auxiliary_fields(member)
    grad = gradient(member)
    row = {
        "index": index,
        "w0": report.w0,
        "w_gamma": report.w_gamma,
        "l1": l1_distance(member, limit) if limit is not None else math.nan,
        "q_h1": aux.norms["q"],
        "v_h1": aux.norms["v"],
        "g_h1": aux.norms["g"],
        "e_h1": aux.norms["e"],
        "q_power_integral": integrate(
            np.where(member.domain.available, aux.q.values, 1.0) ** -0.4,
            member.domain,
        ),
        "area": report.area,
        "max_grad": grad.norm().max_abs(),
        "min_q": float(aux.q.node_values().min()),
    }
    for name, value in row.items():
        if not math.isfinite(value) and name != "l1":
            raise PreconditionError(
                f"sequence member {index} has non-finite {name}"
            )
    return row


def sequence_diagnostics(
    sequence, limit: ScalarField | None = None, gamma: float = 0.0, workers=1
) -> SequenceDiagnostics:
    """
    Per-member energies, ``L^1`` distance to ``limit``, auxiliary ``H^1``
    norms, ``int q^(-2/5)`` and area. Members are evaluated concurrently;
    rows keep the sequence order.
    """
    sequence = list(sequence)
    with ThreadPoolExecutor(max_workers=max(int(workers), 1)) as pool:
        rows = list(
            pool.map(
                lambda item: _member_row(item[0], item[1], limit, gamma),
                enumerate(sequence, start=1),
            )
        )
    return SequenceDiagnostics(rows)


@attrs.define(frozen=True)
class LscReport:
    liminf_estimate: float
    wa_limit: float
    margin: float
    energies: list
    l1_distances: list


def lsc_check(
    sequence,
    limit: ScalarField,
    jump_flags: np.ndarray | None = None,
    tolerance: float | None = None,
) -> LscReport:
    """
    Compare the tail minimum of ``W0(u_j)`` (over the last third of the
    sequence) with ``W^a_0`` of the limit.

    :param tolerance: bound the final ``L^1`` distance must reach
    :raises PreconditionError: if the ``L^1`` distances to the limit are not
        non-increasing or do not reach ``tolerance``
    """
    sequence = list(sequence)
    if not sequence:
        raise PreconditionError("empty sequence")
    distances = [l1_distance(member, limit) for member in sequence]
    slack = 1e-12 * max(max(distances), 1.0)
    if any(b > a + slack for a, b in zip(distances, distances[1:])):
        raise PreconditionError(
            f"sequence does not converge in L1: distances {distances}"
        )
    if tolerance is not None and distances[-1] > tolerance:
        raise PreconditionError(
            f"final L1 distance {distances[-1]:.3e} above {tolerance:.3e}"
        )
    energies = [willmore(member).w0 for member in sequence]
    tail = energies[-max(1, math.ceil(len(energies) / 3)) :]
    liminf = min(tail)
    wa = willmore_absolutely_continuous(limit, jump_flags)
    logger.info(
        f"lsc: tail-min W0={liminf:.6e}, W^a(limit)={wa:.6e}, "
        f"margin={liminf - wa:.3e}"
    )
    return LscReport(
        liminf_estimate=liminf,
        wa_limit=wa,
        margin=liminf - wa,
        energies=energies,
        l1_distances=distances,
    )


@attrs.define(frozen=True, eq=False)
class TraceAttainment:
    """Per-sample boundary attainment of a limit field."""

    value_error: np.ndarray
    normal_error: np.ndarray | None
    g: np.ndarray
    regular: np.ndarray

    def _max(self, values, mask) -> float:
        return float(values[mask].max()) if mask.any() else 0.0

    @property
    def max_value_error_regular(self) -> float:
        return self._max(self.value_error, self.regular)

    @property
    def max_value_error_degenerate(self) -> float:
        return self._max(self.value_error, ~self.regular)

    @property
    def max_normal_error_regular(self) -> float:
        if self.normal_error is None:
            return 0.0
        return self._max(self.normal_error, self.regular)

    @property
    def degenerate_fraction(self) -> float:
        return float(np.mean(~self.regular))

    def rows(self):
        for i, value_error in enumerate(self.value_error):
            yield {
                "sample": i,
                "value_error": value_error,
                "normal_error": (
                    self.normal_error[i]
                    if self.normal_error is not None
                    else math.nan
                ),
                "g": self.g[i],
                "regular": bool(self.regular[i]),
            }


def boundary_trace_check(
    sequence,
    limit: ScalarField,
    curve: BoundaryCurve,
    data: BoundaryData,
    mode: str = "dirichlet",
    tolerance: float | None = None,
) -> TraceAttainment:
    """
    Boundary attainment of ``limit``: ``|u - phi|`` and, in Dirichlet mode,
    ``|du/dnu - dphi/dnu|`` per sample, split by whether ``g`` of the last
    sequence member exceeds ``tolerance`` (default ``h``).

    :raises PreconditionError: if a sequence member violates the boundary
        condition
    """
    sequence = list(sequence)
    if not sequence:
        raise PreconditionError("empty sequence")
    for member in sequence:
        trace_field(member, curve, data)
    tolerance = limit.domain.h if tolerance is None else tolerance
    last = trace_field(sequence[-1], curve)
    g = last.boundary_q**-1.5
    px, py = curve.points[:, 0], curve.points[:, 1]
    limit_trace = trace_field(limit, curve)
    value_error = np.abs(limit_trace.u_boundary - data.value(px, py))
    normal_error = None
    if mode == "dirichlet":
        fx, fy = data.gradient(px, py)
        dphi_dnu = fx * curve.normal[:, 0] + fy * curve.normal[:, 1]
        normal_error = np.abs(limit_trace.u_nu - dphi_dnu)
    return TraceAttainment(
        value_error=value_error,
        normal_error=normal_error,
        g=g,
        regular=g > tolerance,
    )


def steepening_sequence(
    domain, scales, amplitude: float = 0.5
) -> tuple:
    """
    Graphs ``A (1 - exp(-(R - r) / s)) a(x)`` with zero boundary values on a
    disk of radius ``R``; ``a = ((1 + x / R) / 2)^4`` concentrates the
    steepening on the arc around ``theta = 0``. As ``s -> 0`` they converge
    in ``L^1`` to ``A a`` whose trace does not vanish on that arc.

    :return: ``(sequence, limit)``
    """
    radius = domain.params["radius"]
    cx, cy = domain.center

    def arc(x):
        return ((1.0 + (x - cx) / radius) / 2.0) ** 4

    def member(scale):
        def func(x, y):
            depth = np.maximum(radius - np.hypot(x - cx, y - cy), 0.0)
            return amplitude * (1.0 - np.exp(-depth / scale)) * arc(x)

        return ScalarField.from_function(domain, func)

    sequence = [member(scale) for scale in scales]
    limit = ScalarField.from_function(
        domain, lambda x, y: amplitude * arc(x) + 0.0 * y
    )
    return sequence, limit
