# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Descent on nodal values for the discrete Canham-Helfrich energy

``E(u) = alpha int Q + 1/4 int (H - H0)^2 Q - gamma int K Q``

over clamped (``dirichlet``) or hinged (``navier``) graph classes.

The energy gradient is a finite difference of the energy itself. Nodes
whose stencil supports are disjoint are perturbed together (a colouring
with period ``2 * reach + 1``) and every nodal change of the energy
density is attributed to the unique perturbed node within reach. The
gradient and Hessian stencils are assembled once into sparse matrices, so
each energy evaluation costs five sparse products. The
descent direction is the Riesz representative of the gradient in the
discrete H^2 metric ``1/2 L^T W L`` restricted to the free nodes, and
steps follow a backtracking Armijo search.

Only cartesian grids are supported: polar stencils couple nodes across
the pole and around the angle, which breaks the colouring.
"""

from __future__ import annotations

import concurrent.futures
import enum
import logging
import math
import threading

import attrs
import numpy as np
from scipy import sparse
from scipy.sparse.linalg import factorized

from graph_willmore.common.grid import (
    DiscreteDomain,
    ScalarField,
    divergence,
    gradient,
    hessian,
)
from graph_willmore.corpus import bump, random_smooth_field
from graph_willmore.errors import (
    ConfigurationError,
    ParameterError,
    PreconditionError,
    StagnationError,
)
from graph_willmore.geometry.boundary import (
    BoundaryCurve,
    BoundaryData,
    normal_curvature,
    sample_nodal,
)
from graph_willmore.geometry.graphgeom import (
    divergence_form_curvature,
    face_mean_curvature,
    geometry_bundle,
    trace_mean_curvature,
)

# pylint: disable=logging-fstring-interpolation

__all__ = [
    "MinimizeConfig",
    "MinimizeStatus",
    "MinimizeTrace",
    "Minimizer",
    "constraint_mask",
    "discrete_energy_gradient",
    "minimize",
    "willmore_residual",
    "navier_residual",
    "residual_region",
]

module_logger = logging.getLogger(__name__)

MODES = ("dirichlet", "navier")
INITIALS = ("phi-extension", "zero", "bump", "custom")
DIFFERENCES = ("central", "forward")

# Chebyshev reach of the energy density stencil: one-sided second
# differences at boundary-adjacent nodes read three nodes away.
STENCIL_REACH = 3
COLOUR_PERIOD = 2 * STENCIL_REACH + 1

# Linear difference operators the energy density is assembled from.
OPERATORS = ("x", "y", "xx", "xy", "yy")

_CONSTRAINT_TOLERANCE = 1e-12


def _one_of(choices):
    def check(instance, attribute, value):
        if value not in choices:
            raise ConfigurationError(
                f"{value!r} is not one of {', '.join(choices)}",
                section="minimize",
                key=attribute.name,
            )

    return check


def _positive(instance, attribute, value):
    if not value > 0:
        raise ParameterError(
            f"must be positive, got {value}",
            section="minimize",
            key=attribute.name,
        )


def _open_unit(instance, attribute, value):
    if not 0.0 < value < 1.0:
        raise ParameterError(
            f"must lie in (0, 1), got {value}",
            section="minimize",
            key=attribute.name,
        )


@attrs.define(frozen=True)
class MinimizeConfig:
    """
    Parameters of a descent run.

    ``gamma``, ``alpha`` and ``h0`` select the energy; the step and
    tolerance parameters drive the line search. ``Q >= 1`` holds
    identically, so no floor on ``Q`` is applied.
    """

    mode: str = attrs.field(default="dirichlet", validator=_one_of(MODES))
    gamma: float = 0.0
    alpha: float = 0.0
    h0: float = 0.0
    initial: str = attrs.field(default="bump", validator=_one_of(INITIALS))
    bump_amplitude: float = 0.1
    max_iterations: int = attrs.field(default=200, validator=_positive)
    initial_step: float = attrs.field(default=1e-2, validator=_positive)
    max_step: float = attrs.field(default=1.0, validator=_positive)
    backtrack: float = attrs.field(default=0.5, validator=_open_unit)
    armijo: float = attrs.field(default=1e-4, validator=_open_unit)
    gradient_tolerance: float = attrs.field(default=1e-8, validator=_positive)
    energy_tolerance: float = attrs.field(default=1e-14, validator=_positive)
    max_failures: int = attrs.field(default=50, validator=_positive)
    starts: int = attrs.field(default=1, validator=_positive)
    difference: str = attrs.field(
        default="central", validator=_one_of(DIFFERENCES)
    )
    seed: int = 0


class MinimizeStatus(enum.Enum):
    """Why a descent run stopped."""

    CONVERGED = "converged"
    STALLED = "stalled"
    MAX_ITERATIONS = "max_iterations"
    ABORTED = "aborted"


TRACE_COLUMNS = (
    "iteration",
    "energy",
    "gradient_norm",
    "step",
    "willmore_residual",
    "navier_residual",
    "min_q",
)


@attrs.define(eq=False)
class MinimizeTrace:
    """
    Per-iteration records of a run, plus the outcome of every start.

    Row 0 describes the initial field; row ``k`` the iterate after the
    ``k``-th accepted step.
    """

    rows: list = attrs.field(factory=list)
    status: MinimizeStatus | None = None
    start: int = 0
    starts: list = attrs.field(factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    @property
    def energies(self) -> np.ndarray:
        return self.column("energy")

    @property
    def final_energy(self) -> float:
        return self.rows[-1]["energy"]

    def is_monotone(self) -> bool:
        energies = self.energies
        return bool(np.all(np.diff(energies) <= 0.0))


def constraint_mask(domain: DiscreteDomain, mode: str) -> np.ndarray:
    """
    Nodes whose values are fixed by the boundary condition.

    ``navier``: the boundary-adjacent nodes (the trace). ``dirichlet``:
    additionally every node next to them, which pins the normal
    derivative.
    """
    if mode not in MODES:
        raise ConfigurationError(
            f"unknown minimize mode {mode!r}", section="minimize", key="mode"
        )
    frozen = domain.boundary_adjacent.copy()
    if mode == "dirichlet":
        layer = np.zeros(domain.shape, dtype=bool)
        for da in (-1, 0, 1):
            for db in (-1, 0, 1):
                layer |= domain.shift(
                    domain.shift(frozen, 0, da, False), 1, db, False
                )
        frozen |= layer & domain.available
    return frozen


def residual_region(domain: DiscreteDomain) -> np.ndarray:
    """Nodes where the Willmore residual uses centred stencils only."""
    return domain.interior_depth(3)


def willmore_residual(u: ScalarField) -> ScalarField:
    """
    ``Delta_G H + 2 H (H^2 / 4 - K)`` per node, with the Laplace-Beltrami
    operator in divergence form ``(1/Q) div(Q g^-1 grad f)`` and ``H`` in
    divergence form.

    Values near the boundary mix one-sided stencils; compare them over
    :func:`residual_region` only.
    """
    bundle = geometry_bundle(u)
    h_field = bundle.H_div
    flux = bundle.g_inv.apply(gradient(h_field)).scaled(bundle.Q)
    laplace = divergence(flux).values / bundle.padded_q
    h_values = h_field.values
    values = laplace + 2.0 * h_values * (0.25 * h_values**2 - bundle.K.values)
    return ScalarField.from_values(u.domain, values)


def navier_residual(
    u: ScalarField,
    gamma: float,
    curve: BoundaryCurve | None = None,
    data: BoundaryData | None = None,
) -> np.ndarray:
    """
    ``|H - 2 gamma kappa_N|`` at the boundary samples.

    ``H`` is read at the nearest boundary node (or ring), ``kappa_N`` from
    the lifted boundary curve.
    """
    curve = curve or BoundaryCurve.from_domain(u.domain)
    h_values = divergence_form_curvature(u).values
    mean = sample_nodal(h_values, u.domain, curve)
    if gamma == 0.0:
        return np.abs(mean)
    kappa_n = normal_curvature(u, curve, data).kappa_n
    return np.abs(mean - 2.0 * gamma * kappa_n)


class Minimizer:
    """
    Descent for one problem (domain, boundary datum, configuration).

    Instances can run several starts concurrently: the energy and its
    gradient only read shared state. :meth:`abort` stops every running
    start after its current iteration.
    """

    def __init__(
        self,
        domain: DiscreteDomain,
        data: BoundaryData,
        config: MinimizeConfig,
        curve: BoundaryCurve | None = None,
        logger: logging.Logger | None = None,
    ) -> None:
        if domain.mode != "cartesian":
            raise ConfigurationError(
                "the minimizer needs a cartesian grid",
                section="domain",
                key="mode",
            )
        self.logger = logger or module_logger
        self.domain = domain
        self.data = data
        self.config = config
        self.phi = data.field(domain).values
        self.frozen = constraint_mask(domain, config.mode)
        self.free = domain.available & ~self.frozen
        if not self.free.any():
            raise ConfigurationError(
                f"no free nodes left on {domain.shape_kind} h={domain.h} "
                f"in {config.mode} mode"
            )
        if curve is None and domain.shape_kind != "rectangle":
            curve = BoundaryCurve.from_domain(domain)
        self.curve = curve
        self._abort_event = threading.Event()
        self._operators = self._build_operators()
        self._colours = self._build_colours(self.free)
        self._solve = self._build_preconditioner()
        self._region = residual_region(domain)
        self.logger.info(
            f"minimizer on {domain.shape_kind} h={domain.h}: "
            f"{int(self.free.sum())} free nodes, mode {config.mode}, "
            f"{len(self._colours)} colours"
        )

    # --------
    # Energies
    # --------

    def energy_density(self, values: np.ndarray) -> np.ndarray:
        """Quadrature-weighted energy integrand per node."""
        cfg = self.config
        domain = self.domain
        flat = values.ravel()
        gx, gy, xx, xy, yy = (
            (self._operators[name] @ flat).reshape(domain.shape)
            for name in OPERATORS
        )
        q = np.sqrt(1.0 + gx**2 + gy**2)
        pointwise = trace_mean_curvature(gx, gy, xx, xy, yy)
        h_div = face_mean_curvature(domain, values, gx, gy, pointwise)
        det = xx * yy - xy**2
        density = (
            cfg.alpha * q
            + 0.25 * (h_div - cfg.h0) ** 2 * q
            - cfg.gamma * det / q**3
        )
        return np.where(domain.available, domain.weights * density, 0.0)

    def energy(self, values: np.ndarray) -> float:
        return float(np.sum(self.energy_density(values)))

    def _build_operators(self) -> dict:
        """
        Sparse matrices of the gradient and Hessian components, applied to
        the indicator fields of a colouring of the available nodes.
        """
        domain = self.domain
        size = domain.x.size
        flat = np.arange(size).reshape(domain.shape)
        parts = {name: ([], [], []) for name in OPERATORS}
        for chosen, owned, oi, oj in self._build_colours(domain.available):
            indicator = ScalarField(domain, chosen.astype(float))
            grad = gradient(indicator)
            hess = hessian(indicator)
            images = dict(
                zip(OPERATORS, (grad.x, grad.y, hess.xx, hess.xy, hess.yy))
            )
            columns = flat[oi, oj]
            for name, image in images.items():
                picked = image[owned]
                keep = picked != 0.0
                rows, cols, entries = parts[name]
                rows.append(flat[owned][keep])
                cols.append(columns[keep])
                entries.append(picked[keep])
        return {
            name: sparse.csr_matrix(
                (
                    np.concatenate(entries),
                    (np.concatenate(rows), np.concatenate(cols)),
                ),
                shape=(size, size),
            )
            for name, (rows, cols, entries) in parts.items()
        }

    def _build_colours(self, nodes: np.ndarray) -> list:
        """
        Sublattices of ``nodes`` with spacing :data:`COLOUR_PERIOD`, each
        with the nodes it owns (those within reach of a lattice point) and
        the owning lattice coordinates.
        """
        ii, jj = np.indices(self.domain.shape)
        n0, n1 = self.domain.shape
        colours = []
        for a in range(COLOUR_PERIOD):
            for b in range(COLOUR_PERIOD):
                chosen = (
                    nodes
                    & (ii % COLOUR_PERIOD == a)
                    & (jj % COLOUR_PERIOD == b)
                )
                if not chosen.any():
                    continue
                oi = a + COLOUR_PERIOD * np.rint((ii - a) / COLOUR_PERIOD)
                oj = b + COLOUR_PERIOD * np.rint((jj - b) / COLOUR_PERIOD)
                oi = oi.astype(int)
                oj = oj.astype(int)
                inside = (oi >= 0) & (oi < n0) & (oj >= 0) & (oj < n1)
                owned = inside.copy()
                owned[inside] = chosen[oi[inside], oj[inside]]
                colours.append((chosen, owned, oi[owned], oj[owned]))
        return colours

    def perturbation(self, values: np.ndarray) -> float:
        scale = max(1.0, float(np.max(np.abs(values))))
        if self.config.difference == "central":
            return np.finfo(float).eps ** (1.0 / 3.0) * scale
        return math.sqrt(np.finfo(float).eps) * scale

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """
        Derivative of the energy with respect to every free nodal value
        (zero at constrained and exterior nodes).
        """
        eps = self.perturbation(values)
        central = self.config.difference == "central"
        base = None if central else self.energy_density(values)
        out = np.zeros(self.domain.shape)
        for chosen, owned, oi, oj in self._colours:
            plus = self.energy_density(values + eps * chosen)
            minus = (
                self.energy_density(values - eps * chosen) if central else base
            )
            np.add.at(out, (oi, oj), (plus - minus)[owned])
        return out / (2.0 * eps if central else eps)

    def check_gradient(self, values: np.ndarray) -> tuple:
        """
        Compare :meth:`gradient` with one-node-at-a-time central
        differences of the total energy.

        :return: ``(gradient, oracle, max relative error)``
        """
        eps = np.finfo(float).eps ** (1.0 / 3.0) * max(
            1.0, float(np.max(np.abs(values)))
        )
        oracle = np.zeros(self.domain.shape)
        for index in zip(*np.nonzero(self.free)):
            bumped = values.copy()
            bumped[index] += eps
            upper = self.energy(bumped)
            bumped[index] -= 2.0 * eps
            oracle[index] = (upper - self.energy(bumped)) / (2.0 * eps)
        grad = self.gradient(values)
        scale = max(float(np.max(np.abs(oracle))), np.finfo(float).tiny)
        return grad, oracle, float(np.max(np.abs(grad - oracle))) / scale

    # --------------
    # Preconditioner
    # --------------

    def _build_preconditioner(self):
        domain = self.domain
        avail = domain.available
        index = np.full(domain.shape, -1, dtype=int)
        index[self.free] = np.arange(int(self.free.sum()))
        rows_mask = avail.copy()
        for axis in (0, 1):
            for offset in (1, -1):
                rows_mask &= domain.shift(avail, axis, offset, False)
        row_of = np.full(domain.shape, -1, dtype=int)
        row_of[rows_mask] = np.arange(int(rows_mask.sum()))
        inv_h2 = 1.0 / domain.h**2
        rows, cols, entries = [], [], []
        stencil = [((0, 0), -4.0)] + [
            ((axis, offset), 1.0) for axis in (0, 1) for offset in (1, -1)
        ]
        for (axis, offset), coefficient in stencil:
            column = domain.shift(index, axis, offset, -1)
            keep = rows_mask & (column >= 0)
            rows.append(row_of[keep])
            cols.append(column[keep])
            entries.append(np.full(int(keep.sum()), coefficient * inv_h2))
        laplacian = sparse.coo_matrix(
            (
                np.concatenate(entries),
                (np.concatenate(rows), np.concatenate(cols)),
            ),
            shape=(int(rows_mask.sum()), int(self.free.sum())),
        ).tocsr()
        weights = sparse.diags(domain.weights[rows_mask])
        metric = 0.5 * (laplacian.T @ weights @ laplacian)
        diagonal = metric.diagonal()
        shift = 1e-10 * (float(diagonal.mean()) if diagonal.size else 1.0)
        metric = metric + shift * sparse.identity(metric.shape[0])
        return factorized(sparse.csc_matrix(metric))

    def direction(self, grad: np.ndarray) -> np.ndarray:
        out = np.zeros(self.domain.shape)
        out[self.free] = -self._solve(grad[self.free])
        return out

    # -----------
    # Constraints
    # -----------

    def check_constraints(self, values: np.ndarray) -> None:
        """:raises PreconditionError: if a constrained node differs from phi"""
        gap = np.abs(values - self.phi)[self.frozen]
        worst = float(np.max(gap)) if gap.size else 0.0
        if worst > _CONSTRAINT_TOLERANCE * max(1.0, self.phi_scale):
            raise PreconditionError(
                f"field violates the {self.config.mode} boundary condition: "
                f"max |u - phi| = {worst:.3e} on constrained nodes"
            )

    @property
    def phi_scale(self) -> float:
        return float(np.max(np.abs(self.phi))) if self.phi.size else 0.0

    def initial_values(self, initial=None, start: int = 0) -> np.ndarray:
        """
        Starting field of ``start``. Starts other than 0 scale the bump
        randomly and add a seeded smooth perturbation.
        """
        cfg = self.config
        domain = self.domain
        if cfg.initial == "custom" or initial is not None:
            if initial is None:
                raise ConfigurationError(
                    "initial = custom needs an initial field",
                    section="minimize",
                    key="initial",
                )
            if isinstance(initial, ScalarField):
                initial = initial.values
            values = np.array(initial, dtype=float)
            values = np.where(domain.available, values, 0.0)
            self.check_constraints(values)
            return values
        rng = np.random.default_rng([cfg.seed, start])
        if cfg.initial == "zero":
            values = np.zeros(domain.shape)
        else:
            values = self.phi.copy()
        if cfg.initial == "bump":
            scale = 1.0 if start == 0 else rng.uniform(0.5, 1.5)
            values = values + bump(domain, cfg.bump_amplitude * scale).values
            if start:
                values = values + random_smooth_field(
                    domain, rng, amplitude=0.1 * cfg.bump_amplitude
                ).values
        values = np.where(self.frozen, self.phi, values)
        return np.where(domain.available, values, 0.0)

    # -----------
    # Descent
    # -----------

    def abort(self) -> None:
        self._abort_event.set()

    def _record(self, iteration, values, energy, grad_norm, step) -> dict:
        u = ScalarField(self.domain, values)
        residual = willmore_residual(u).max_abs(self._region)
        navier = math.nan
        if self.config.mode == "navier" and self.curve is not None:
            navier = float(
                np.max(navier_residual(u, self.config.gamma, self.curve))
            )
        grad = gradient(u)
        q = np.sqrt(1.0 + grad.x**2 + grad.y**2)[self.domain.available]
        row = {
            "iteration": iteration,
            "energy": energy,
            "gradient_norm": grad_norm,
            "step": step,
            "willmore_residual": residual,
            "navier_residual": navier,
            "min_q": float(np.min(q ** (-2.5))),
        }
        self.logger.debug(
            f"iteration {iteration}: E={energy:.12e} |g|={grad_norm:.3e} "
            f"step={step:.3e} residual={residual:.3e}"
        )
        return row

    def _descent_data(self, values) -> tuple:
        grad = self.gradient(values)
        direction = self.direction(grad)
        slope = float(np.sum(grad[self.free] * direction[self.free]))
        return direction, slope, math.sqrt(max(-slope, 0.0))

    def run(self, initial=None, start: int = 0, task_callback=None) -> tuple:
        """
        Descend from the initial field of ``start``.

        :param initial: field for ``initial = custom``
        :param start: start index (seeds the initial perturbation)
        :param task_callback: called with ``progress=iteration`` after
            every accepted step and with ``status=`` at the end
        :return: ``(u*, MinimizeTrace)``
        :raises StagnationError: after ``max_failures`` consecutive
            rejected trial steps
        """
        cfg = self.config
        values = self.initial_values(initial, start)
        energy = self.energy(values)
        direction, slope, grad_norm = self._descent_data(values)
        trace = MinimizeTrace(start=start)
        trace.rows.append(self._record(0, values, energy, grad_norm, 0.0))
        step = cfg.initial_step
        failures = 0
        status = MinimizeStatus.MAX_ITERATIONS
        for iteration in range(1, cfg.max_iterations + 1):
            if self._abort_event.is_set():
                status = MinimizeStatus.ABORTED
                break
            if grad_norm < cfg.gradient_tolerance:
                status = MinimizeStatus.CONVERGED
                break
            while True:
                trial = values + step * direction
                trial_energy = self.energy(trial)
                if (
                    math.isfinite(trial_energy)
                    and trial_energy <= energy + cfg.armijo * step * slope
                ):
                    break
                failures += 1
                if failures >= cfg.max_failures:
                    raise StagnationError(
                        f"line search failed {failures} consecutive times "
                        f"at iteration {iteration}",
                        {
                            "start": start,
                            "iteration": iteration,
                            "energy": energy,
                            "gradient_norm": grad_norm,
                            "step": step,
                            "failures": failures,
                        },
                    )
                step *= cfg.backtrack
            failures = 0
            decrease = energy - trial_energy
            values, energy = trial, trial_energy
            direction, slope, grad_norm = self._descent_data(values)
            trace.rows.append(
                self._record(iteration, values, energy, grad_norm, step)
            )
            if task_callback is not None:
                task_callback(progress=iteration)
            if decrease < cfg.energy_tolerance * max(1.0, abs(energy)):
                status = MinimizeStatus.STALLED
                break
            step = min(step / cfg.backtrack, cfg.max_step)
        else:
            if grad_norm < cfg.gradient_tolerance:
                status = MinimizeStatus.CONVERGED
        trace.status = status
        self.logger.info(
            f"start {start}: {status.value} after {len(trace) - 1} steps, "
            f"E={energy:.12e}, |g|={grad_norm:.3e}"
        )
        if task_callback is not None:
            task_callback(status=status)
        return ScalarField(self.domain, values), trace

    def run_starts(self, initial=None, workers: int = 1) -> list:
        """All configured starts, in start order."""
        starts = range(self.config.starts)
        if workers <= 1 or self.config.starts == 1:
            return [self.run(initial, start) for start in starts]
        with concurrent.futures.ThreadPoolExecutor(workers) as executor:
            return list(
                executor.map(lambda start: self.run(initial, start), starts)
            )


def discrete_energy_gradient(
    u: ScalarField,
    config: MinimizeConfig,
    data: BoundaryData | None = None,
) -> ScalarField:
    """
    Energy gradient with respect to the free nodal values of ``u``.

    :raises PreconditionError: if ``u`` violates the boundary condition
    """
    minimizer = Minimizer(u.domain, data or BoundaryData(), config)
    minimizer.check_constraints(u.values)
    return ScalarField(u.domain, minimizer.gradient(u.values))


def minimize(
    domain: DiscreteDomain,
    data: BoundaryData,
    config: MinimizeConfig,
    initial=None,
    workers: int = 1,
    logger: logging.Logger | None = None,
) -> tuple:
    """
    Run every start and keep the one with the lowest final energy (the
    first on ties). The returned trace lists all starts in ``starts``.

    :return: ``(u*, MinimizeTrace)``
    """
    minimizer = Minimizer(domain, data, config, logger=logger)
    results = minimizer.run_starts(initial, workers)
    best_field, best_trace = min(
        results, key=lambda result: result[1].final_energy
    )
    best_trace.starts = [
        {
            "start": trace.start,
            "status": trace.status.value,
            "iterations": len(trace) - 1,
            "initial_energy": trace.rows[0]["energy"],
            "energy": trace.final_energy,
        }
        for _, trace in results
    ]
    return best_field, best_trace
