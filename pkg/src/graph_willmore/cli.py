# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Command line entry point and experiment drivers.

``graph-willmore --config run.ini`` reads the configuration, selects the
driver named by ``[experiment] command`` and writes its reports into the
output directory. Exit codes: 0 success, 1 numerical failure (a
``failure.json`` with diagnostics is written), 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import math
import pathlib
import sys

import numpy as np

from graph_willmore.common.grid import DiscreteDomain, ScalarField, gradient
from graph_willmore.common.reports import ReportWriter, field_rows
from graph_willmore.config import ExperimentConfig, load_config
from graph_willmore.corpus import (
    RadialK,
    bump,
    divergence_diagnostics,
    make_example,
    mollified_sequence,
    random_smooth_field,
    random_smooth_fields,
    smooth_corpus,
)
from graph_willmore.errors import (
    ConfigurationError,
    NumericalFailure,
    PreconditionError,
)
from graph_willmore.functionals.energy import (
    apriori_ensemble,
    bound_certificates,
    gauss_energy_boundary_form,
    gauss_energy_EG,
    integration_by_parts_residual,
    willmore,
)
from graph_willmore.functionals.relax import (
    auxiliary_fields,
    lsc_check,
    reconstruct_regular_gradient,
    sequence_diagnostics,
)
from graph_willmore.geometry.boundary import (
    BoundaryCurve,
    BoundaryData,
    boundary_rows,
    gauss_bonnet_residual,
    geodesic_curvature,
    normal_curvature,
    trace_field,
)
from graph_willmore.geometry.graphgeom import (
    geometry_bundle,
    hessian_bound_check,
)
from graph_willmore.minimize import MinimizeConfig, minimize

# pylint: disable=logging-fstring-interpolation

__all__ = ["main", "run", "build_parser", "DRIVERS"]

module_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

LOG_FORMAT = (
    "[%(asctime)s] {%(filename)s:%(lineno)d} %(levelname)s - %(message)s"
)
LOG_FILE = "graph_willmore.log"


class Driver:
    """
    Base class of the experiment drivers.

    A driver turns an :class:`ExperimentConfig` into report files through
    a :class:`ReportWriter`; :meth:`run` returns the exit status.
    """

    command = None

    def __init__(
        self,
        config: ExperimentConfig,
        writer: ReportWriter,
        logger: logging.Logger | None = None,
    ) -> None:
        self.config = config
        self.writer = writer
        self.logger = logger or module_logger

    def run(self) -> int:
        raise NotImplementedError

    # -------
    # Helpers
    # -------

    @property
    def domain_params(self) -> dict:
        return self.config.section("domain")

    def build_domain(self, resolution: float) -> DiscreteDomain:
        params = self.domain_params
        h = 1.0 / resolution
        center = (params["center_x"], params["center_y"])
        shape = params["shape"]
        if shape == "rectangle":
            origin = (
                center[0] - 0.5 * params["width"],
                center[1] - 0.5 * params["height"],
            )
            return DiscreteDomain.rectangle(
                width=params["width"],
                height=params["height"],
                h=h,
                origin=origin,
            )
        if shape == "disk":
            return DiscreteDomain.disk(
                radius=params["radius"],
                h=h,
                mode=params["mode"],
                excision=params["excision"],
                center=center,
                n_theta=params.get("n_theta"),
            )
        return DiscreteDomain.annulus(
            inner_radius=params["inner_radius"],
            radius=params["radius"],
            h=h,
            mode=params["mode"],
            center=center,
            n_theta=params.get("n_theta"),
        )

    def domains(self):
        for resolution in self.config.resolutions:
            self.logger.info(
                f"{self.command}: resolution 1/h = {resolution:g}"
            )
            yield resolution, self.build_domain(resolution)

    def boundary_data(self) -> BoundaryData:
        params = self.config.section("boundary")
        domain = self.domain_params
        return BoundaryData(
            family=params["family"],
            slope_x=params["slope_x"],
            slope_y=params["slope_y"],
            offset=params["offset"],
            sphere_radius=params["sphere_radius"],
            amplitude=params["amplitude"],
            frequency=params["frequency"],
            center=(domain["center_x"], domain["center_y"]),
        )

    def curve(self, domain: DiscreteDomain) -> BoundaryCurve | None:
        if domain.shape_kind == "rectangle":
            return None
        samples = self.config.section("boundary").get("samples")
        return BoundaryCurve.from_domain(domain, samples)

    def example(self):
        params = self.config.section("example")
        return make_example(
            params["id"],
            epsilon=params["epsilon"],
            k=params["k"],
            jump=params["jump"],
        )

    def build_field(self, domain: DiscreteDomain) -> tuple:
        """``(u, data)``; ``data`` is ``None`` when ``u`` defines its trace."""
        params = self.config.section("field")
        kind = params["kind"]
        amplitude = params["amplitude"]
        zero = BoundaryData("zero")
        if kind == "boundary":
            data = self.boundary_data()
            return data.field(domain), data
        if kind == "zero":
            return ScalarField.constant(domain, 0.0), zero
        if kind == "sphere_cap":
            data = BoundaryData(
                "sphere_cap",
                sphere_radius=self.config.section("boundary")["sphere_radius"],
                center=domain.center,
            )
            return data.field(domain), data
        if kind == "bump":
            return bump(domain, amplitude), zero
        if kind == "fourier":
            rng = np.random.default_rng(self.config.seed)
            return random_smooth_field(domain, rng, amplitude=amplitude), zero
        if kind == "parabolic":
            cx = domain.center[0]
            return (
                ScalarField.from_function(
                    domain, lambda x, y: 0.5 * (x - cx) ** 2
                ),
                None,
            )
        example = self.example()
        return example.field(domain), example.boundary_data()


class EnergyDriver(Driver):
    """Energies, boundary quantities and certificates per resolution."""

    command = "energy"

    def run(self) -> int:
        params = self.config.section("energy")
        gamma, alpha, h0 = params["gamma"], params["alpha"], params["h0"]
        rows = []
        finest = None
        for resolution, domain in self.domains():
            u, data = self.build_field(domain)
            bundle = geometry_bundle(u)
            report = willmore(u, gamma, alpha, h0, bundle)
            row = {"resolution": resolution, "h": domain.h}
            row.update(
                {
                    key: value
                    for key, value in report.as_dict().items()
                    if key not in ("helfrich", "certificates")
                }
            )
            row["helfrich"] = report.helfrich.value
            row["h_discrepancy"] = bundle.h_discrepancy
            row["k_discrepancy"] = bundle.k_discrepancy
            stencils = domain.stencil_report()
            row["fallbacks"] = stencils["second_order_fallbacks"]
            curve = self.curve(domain)
            if curve is not None:
                trace = trace_field(u, curve, data)
                kappa_g = geodesic_curvature(trace, curve)
                chi = domain.euler_characteristic
                row["gauss_bonnet_residual"] = gauss_bonnet_residual(
                    bundle, kappa_g, chi
                )
                row["e_g"] = gauss_energy_EG(
                    u,
                    curve,
                    trace=trace,
                    collar_fraction=params["extension_collar"],
                    bundle=bundle,
                )
                row["e_g_boundary"] = gauss_energy_boundary_form(
                    trace, curve, chi
                )
                row["ibp_residual"] = integration_by_parts_residual(
                    bundle, trace, curve
                )
                certificates = bound_certificates(
                    u, curve, data, gamma, bundle, trace
                )
                row.update(
                    {
                        f"margin_{name}": margin
                        for name, margin in certificates.margins.items()
                    }
                )
                kappa_n = normal_curvature(trace, curve)
                finest = (curve, trace, kappa_g, kappa_n)
            rows.append(row)
        self.writer.write_csv("energy.csv", rows)
        if finest is not None:
            self.writer.write_csv("boundary.csv", boundary_rows(*finest))
        self.writer.write_json(
            "energy.json", {"command": self.command, "resolutions": rows}
        )
        return EXIT_OK


class VerifyDriver(Driver):
    """
    Invariant suite over the smooth corpus and a seeded ensemble of random
    smooth fields. Every check is a row
    ``check, field, resolution, value, tolerance, margin, passed``.
    """

    command = "verify"
    ensemble_size = 100

    def _checks(self, u, data, domain):
        h = domain.h
        bundle = geometry_bundle(u)
        chain = hessian_bound_check(u, bundle)
        yield "hessian_chain", chain.violations, 0.0
        yield "h_discrepancy", bundle.h_discrepancy, 200.0 * h * h
        report = willmore(u, gamma=1.0, bundle=bundle)
        yield "integrand_nonnegative", max(-report.integrand_min, 0.0), 1e-8
        curve = self.curve(domain)
        if curve is None:
            return
        trace = trace_field(u, curve, data)
        kappa_g = geodesic_curvature(trace, curve)
        chi = domain.euler_characteristic
        yield "gauss_bonnet", gauss_bonnet_residual(
            bundle, kappa_g, chi
        ), 10.0 * h
        yield "integration_by_parts", integration_by_parts_residual(
            bundle, trace, curve
        ), 10.0 * h * (1.0 + u.max_abs())
        certificates = bound_certificates(u, curve, data, 1.0, bundle, trace)
        for bound, margin in certificates.margins.items():
            yield f"bound_{bound}", max(-margin, 0.0), 10.0 * h
        yield "ah_identity", certificates.ah_gap, 1e-8 * (
            1.0 + abs(certificates.ah_reference)
        )

    def _ensemble_checks(self, domain):
        """Inequality chain and a-priori ratios over seeded random fields."""
        fields = random_smooth_fields(
            domain, self.ensemble_size, self.config.seed
        )
        violations = sum(hessian_bound_check(u).violations for u in fields)
        yield "hessian_chain", violations, 0.0
        ratios = apriori_ensemble(fields)
        bad = np.count_nonzero(~(np.isfinite(ratios) & (ratios > 0.0)))
        yield "apriori_ratio", bad, 0.0

    def run(self) -> int:
        rows = []
        for resolution, domain in self.domains():
            checks = [
                (entry.name, self._checks(entry.field, entry.data, domain))
                for entry in smooth_corpus(domain, self.config.seed)
            ]
            checks.append(("random_ensemble", self._ensemble_checks(domain)))
            for name, results in checks:
                for check, value, tolerance in results:
                    rows.append(
                        {
                            "check": check,
                            "field": name,
                            "resolution": resolution,
                            "value": float(value),
                            "tolerance": tolerance,
                            "margin": tolerance - float(value),
                            "passed": bool(value <= tolerance),
                        }
                    )
        failed = [row for row in rows if not row["passed"]]
        for row in failed:
            self.logger.error(
                f"check {row['check']} failed on {row['field']} at "
                f"1/h={row['resolution']:g}: {row['value']:.3e} > "
                f"{row['tolerance']:.3e}"
            )
        self.writer.write_csv("verify.csv", rows)
        self.writer.write_json(
            "verify.json",
            {
                "command": self.command,
                "checks": len(rows),
                "failed": len(failed),
                "passed": not failed,
                "min_margin": min(row["margin"] for row in rows),
            },
        )
        return EXIT_OK if not failed else EXIT_NUMERICAL


class ExampleDriver(Driver):
    """
    Divergence tables of a singular example over excision schedules and,
    when ``[example] epsilons`` is set, the amplitude sweep of the example.
    """

    command = "example"
    amplitude_examples = ("logloglinear", "sqrtlog")

    def epsilon_rows(self, params: dict) -> list:
        """``W0(eps u)``, ``W_gamma(eps u)``, the ratio to the previous
        amplitude and ``max |eps grad u|`` per resolution."""
        if params["id"] not in self.amplitude_examples:
            raise ConfigurationError(
                f"example {params['id']!r} has no amplitude to sweep",
                section="example",
                key="epsilons",
            )
        gamma = self.config.section("energy")["gamma"]
        rows = []
        for resolution in self.config.resolutions:
            previous = None
            for epsilon in params["epsilons"]:
                example = make_example(params["id"], epsilon=epsilon)
                domain = example.domain(
                    1.0 / resolution, mode=self.domain_params["mode"]
                )
                u = example.field(domain)
                report = willmore(u, gamma=gamma)
                rows.append(
                    {
                        "resolution": resolution,
                        "epsilon": epsilon,
                        "w0": report.w0,
                        "w_gamma": report.w_gamma,
                        "ratio": (
                            previous / report.w0
                            if previous is not None and report.w0 > 0.0
                            else math.nan
                        ),
                        "max_slope": gradient(u).norm().max_abs(),
                    }
                )
                previous = report.w0
        return rows

    def run(self) -> int:
        params = self.config.section("example")
        sweep = self.epsilon_rows(params) if params["epsilons"] else None
        example = self.example()
        rows = []
        for resolution in self.config.resolutions:
            domain = example.domain(
                1.0 / resolution, mode=self.domain_params["mode"]
            )
            table = divergence_diagnostics(
                example,
                params["deltas"],
                domain,
                exponents=tuple(params["p"]),
                oracle=params["oracle"],
            )
            for row in table.rows:
                rows.append({"resolution": resolution, **row})
        self.writer.write_csv("example.csv", rows)
        if sweep is not None:
            self.writer.write_csv("example_epsilon.csv", sweep)
        self.writer.write_json(
            "example.json",
            {"command": self.command, "example": example.describe()},
        )
        return EXIT_OK


class RelaxDriver(Driver):
    """
    Smooth approximating sequence of a singular example on the finest
    grid: per-member diagnostics and the lower-semicontinuity check.
    """

    command = "relax"

    def run(self) -> int:
        params = self.config.section("relax")
        target = self.example()
        resolution = self.config.resolutions[-1]
        domain = target.domain(
            1.0 / resolution, mode=self.domain_params["mode"]
        )
        sequence = [
            mollified_sequence(target, j, domain, params["sigma0"])
            for j in range(1, params["members"] + 1)
        ]
        limit = target.field(domain)
        flags = (
            target.jump_flags(domain, 1.5 * domain.spacing[0])
            if isinstance(target, RadialK) and target.jump > 0
            else None
        )
        gamma = self.config.section("energy")["gamma"]
        diagnostics = sequence_diagnostics(
            sequence, limit, gamma, workers=self.config.workers
        )
        lsc = lsc_check(sequence, limit, flags)
        aux = auxiliary_fields(
            sequence[-1], tolerance=params["tolerance_factor"] * domain.h
        )
        regular = reconstruct_regular_gradient(aux)
        self.writer.write_csv("relax.csv", diagnostics.rows)
        self.writer.write_json(
            "relax.json",
            {
                "command": self.command,
                "example": target.describe(),
                "resolution": resolution,
                "lsc": lsc,
                "undefined_fraction": regular.undefined_fraction,
                "dq_constant": aux.dq_constant,
                "dv_constant": aux.dv_constant,
            },
        )
        return EXIT_OK


class MinimizeDriver(Driver):
    """Descent on the finest grid; trace, final field and summary."""

    command = "minimize"

    def run(self) -> int:
        params = self.config.section("minimize")
        energy = self.config.section("energy")
        config = MinimizeConfig(
            gamma=energy["gamma"],
            alpha=energy["alpha"],
            h0=energy["h0"],
            seed=self.config.seed,
            **params,
        )
        domain = self.build_domain(self.config.resolutions[-1])
        field, trace = minimize(
            domain,
            self.boundary_data(),
            config,
            workers=self.config.workers,
            logger=self.logger,
        )
        report = willmore(field, config.gamma, config.alpha, config.h0)
        self.writer.write_csv("minimize_trace.csv", trace.rows)
        self.writer.write_csv("minimize_field.csv", field_rows(field))
        self.writer.write_json(
            "minimize.json",
            {
                "command": self.command,
                "status": trace.status,
                "start": trace.start,
                "starts": trace.starts,
                "energy": report,
                "sup_u": field.max_abs(),
            },
        )
        return EXIT_OK


class SweepDriver(Driver):
    """
    Refinement study against analytic references: observed orders
    ``log(e_h / e_h') / log(h / h')`` between successive resolutions.
    """

    command = "sweep"

    def references(self, domain: DiscreteDomain, data) -> dict:
        kind = self.config.section("field")["kind"]
        family = data.family if data is not None else None
        area = domain.analytic_area()
        if kind == "zero" or (kind == "boundary" and family == "zero"):
            return {"area": area, "w0": 0.0, "total_gauss": 0.0}
        if kind == "boundary" and family == "affine":
            slope = math.hypot(data.slope_x, data.slope_y)
            return {
                "area": math.sqrt(1.0 + slope**2) * area,
                "w0": 0.0,
                "total_gauss": 0.0,
            }
        if family == "sphere_cap" and domain.shape_kind == "disk":
            radius = data.sphere_radius
            a = domain.params["radius"]
            height = radius - math.sqrt(radius**2 - a**2)
            cap = 2.0 * math.pi * radius * height
            return {
                "area": cap,
                "w0": cap / radius**2,
                "total_gauss": cap / radius**2,
            }
        raise ConfigurationError(
            f"no analytic reference for field kind {kind!r} on a "
            f"{domain.shape_kind}",
            section="field",
            key="kind",
        )

    @staticmethod
    def _order(previous, current, key):
        e0, e1 = previous[f"{key}_error"], current[f"{key}_error"]
        if e0 <= 0.0 or e1 <= 0.0:
            return math.nan
        return math.log(e0 / e1) / math.log(previous["h"] / current["h"])

    def run(self) -> int:
        rows = []
        for resolution, domain in self.domains():
            u, data = self.build_field(domain)
            reference = self.references(domain, data)
            report = willmore(u)
            row = {"resolution": resolution, "h": domain.h}
            for key in ("area", "w0", "total_gauss"):
                value = getattr(report, key)
                row[key] = value
                row[f"{key}_reference"] = reference[key]
                row[f"{key}_error"] = abs(value - reference[key])
            if rows:
                for key in ("area", "w0", "total_gauss"):
                    row[f"{key}_order"] = self._order(rows[-1], row, key)
            rows.append(row)
        self.writer.write_csv("sweep.csv", rows)
        self.writer.write_json(
            "sweep.json", {"command": self.command, "rows": rows}
        )
        return EXIT_OK


DRIVERS = {
    driver.command: driver
    for driver in (
        EnergyDriver,
        VerifyDriver,
        ExampleDriver,
        RelaxDriver,
        MinimizeDriver,
        SweepDriver,
    )
}


def run(config: ExperimentConfig, **kwargs) -> int:
    """Execute the driver named by the configuration."""
    writer = ReportWriter(
        config.output, config.config_hash, config.grid_parameters()
    )
    driver = DRIVERS[config.command](config, writer, **kwargs)
    return driver.run()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graph-willmore",
        description="Willmore energies of graph surfaces",
    )
    parser.add_argument(
        "--config", required=True, help="experiment configuration (INI)"
    )
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument(
        "--resolutions", help="comma separated list of 1/h values"
    )
    parser.add_argument(
        "--verbose", action="store_true", help="log debug messages"
    )
    return parser


def _overrides(options) -> dict:
    overrides = {}
    if options.out is not None:
        overrides[("experiment", "output")] = options.out
    if options.seed is not None:
        overrides[("experiment", "seed")] = options.seed
    if options.resolutions is not None:
        overrides[("domain", "resolutions")] = options.resolutions
    return overrides


def configure_logging(output: pathlib.Path, verbose: bool = False) -> list:
    """Attach the file and stdout handlers to the package logger."""
    output.mkdir(parents=True, exist_ok=True)
    formatter = logging.Formatter(LOG_FORMAT)
    handlers = [
        logging.FileHandler(output / LOG_FILE, encoding="utf-8"),
        logging.StreamHandler(sys.stdout),
    ]
    package_logger = logging.getLogger("graph_willmore")
    package_logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    for handler in handlers:
        handler.setFormatter(formatter)
        package_logger.addHandler(handler)
    return handlers


def _release(handlers) -> None:
    package_logger = logging.getLogger("graph_willmore")
    for handler in handlers:
        package_logger.removeHandler(handler)
        handler.close()


def main(args=None, **kwargs) -> int:
    """
    Console entry point.

    :param args: command line arguments, ``sys.argv[1:]`` by default
    :param kwargs: forwarded to the driver (e.g. ``logger``)
    :return: the exit status
    """
    options = build_parser().parse_args(args)
    try:
        config = load_config(options.config, _overrides(options))
    except ConfigurationError as exc:
        print(f"{options.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handlers = configure_logging(config.output, options.verbose)
    try:
        return run(config, **kwargs)
    except ConfigurationError as exc:
        module_logger.error(f"configuration error: {exc}")
        print(f"{options.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, PreconditionError) as exc:
        writer = ReportWriter(
            config.output, config.config_hash, config.grid_parameters()
        )
        path = writer.write_json(
            "failure.json",
            {
                "command": config.command,
                "error": type(exc).__name__,
                "message": str(exc),
                "diagnostics": getattr(exc, "diagnostics", {}),
            },
        )
        module_logger.error(f"{type(exc).__name__}: {exc} (see {path})")
        print(
            f"{type(exc).__name__}: {exc}; diagnostics in {path}",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    finally:
        _release(handlers)


if __name__ == "__main__":
    sys.exit(main())
