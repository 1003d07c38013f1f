# -*- coding: utf-8 -*-
"""
End-to-end tests of the command line drivers: exit codes and the report
files every command writes.
"""
import csv
import json
import math

import numpy as np
import pytest

from graph_willmore.cli import DRIVERS, build_parser, main


def _run(test_data, tmp_path, name, *extra, **kwargs):
    args = ["--config", str(test_data / name), "--out", str(tmp_path)]
    return main(args + list(extra), **kwargs)


def _csv(path):
    with path.open(encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def _json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_every_command_has_a_driver():
    assert set(DRIVERS) == {
        "energy",
        "verify",
        "example",
        "relax",
        "minimize",
        "sweep",
    }


def test_config_is_required(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    assert "--config" in capsys.readouterr().err


def test_energy_command(test_data, tmp_path, mocker):
    logger = mocker.Mock()
    status = _run(test_data, tmp_path, "sphere_cap_energy.ini", logger=logger)
    assert status == 0
    rows = _csv(tmp_path / "energy.csv")
    assert [float(row["resolution"]) for row in rows] == [16.0, 32.0]
    finest = rows[-1]
    assert float(finest["w0"]) == pytest.approx(
        math.pi * (2.0 - math.sqrt(3.0)), rel=5e-2
    )
    assert float(finest["gauss_bonnet_residual"]) < 0.1
    report = _json(tmp_path / "energy.json")
    assert len(report["config_hash"]) == 64
    assert report["grid"]["resolutions"] == [16.0, 32.0]
    assert (tmp_path / "boundary.csv").exists()
    assert (tmp_path / "graph_willmore.log").exists()
    assert logger.info.called


def test_verify_command(test_data, tmp_path):
    assert _run(test_data, tmp_path, "verify.ini") == 0
    summary = _json(tmp_path / "verify.json")
    assert summary["passed"] is True
    assert summary["failed"] == 0
    rows = _csv(tmp_path / "verify.csv")
    assert len(rows) == summary["checks"]
    assert {row["field"] for row in rows} == {
        "zero",
        "affine",
        "sphere_cap",
        "parabolic",
        "fourier",
        "random_ensemble",
    }
    assert all(row["passed"] == "true" for row in rows)
    ensemble = [row for row in rows if row["field"] == "random_ensemble"]
    assert {row["check"] for row in ensemble} == {
        "hessian_chain",
        "apriori_ratio",
    }
    assert all(float(row["value"]) == 0.0 for row in ensemble)
    bounds = [row for row in rows if row["check"] == "bound_abound"]
    assert all(float(row["margin"]) > 0.0 for row in bounds)


def test_verify_reports_are_reproducible(test_data, tmp_path):
    reports = []
    for _ in range(2):
        status = _run(test_data, tmp_path, "verify.ini", "--resolutions", "16")
        assert status == 0
        reports.append(
            [
                (tmp_path / name).read_bytes()
                for name in ("verify.csv", "verify.json")
            ]
        )
    assert reports[0] == reports[1]


def test_configuration_errors_exit_with_2(test_data, tmp_path, capsys):
    status = _run(test_data, tmp_path, "bad_negative_resolution.ini")
    assert status == 2
    assert "line 6: [domain] resolutions" in capsys.readouterr().err


def test_driver_configuration_errors_exit_with_2(test_data, tmp_path, capsys):
    assert _run(test_data, tmp_path, "minimize_polar.ini") == 2
    assert "cartesian grid" in capsys.readouterr().err


def test_minimize_command(test_data, tmp_path):
    assert _run(test_data, tmp_path, "minimize.ini") == 0
    trace = _csv(tmp_path / "minimize_trace.csv")
    energies = [float(row["energy"]) for row in trace]
    assert energies == sorted(energies, reverse=True)
    summary = _json(tmp_path / "minimize.json")
    assert summary["status"] in {"converged", "stalled", "max_iterations"}
    assert len(summary["starts"]) == 1
    field = _csv(tmp_path / "minimize_field.csv")
    assert set(field[0]) == {"x", "y", "u", "node_class"}


def test_numerical_failures_exit_with_1(test_data, tmp_path, capsys):
    assert _run(test_data, tmp_path, "minimize_stagnation.ini") == 1
    failure = _json(tmp_path / "failure.json")
    assert failure["error"] == "StagnationError"
    assert failure["diagnostics"]["failures"] == 1
    assert "failure.json" in capsys.readouterr().err


def test_sweep_command(test_data, tmp_path):
    assert _run(test_data, tmp_path, "sweep_sphere_cap.ini") == 0
    coarse, fine = _csv(tmp_path / "sweep.csv")
    assert float(fine["area_error"]) < float(coarse["area_error"])
    assert float(fine["w0_error"]) < 1e-2
    assert math.isfinite(float(fine["area_order"]))


def test_example_command(test_data, tmp_path):
    assert _run(test_data, tmp_path, "example_sqrtlog.ini") == 0
    rows = _csv(tmp_path / "example.csv")
    assert [float(row["delta"]) for row in rows] == [0.4, 0.2]
    assert {"grad_p1", "grad_p2", "oracle_hess2"} <= set(rows[0])
    assert float(rows[0]["hess_error"]) < 10.0 / 32**2
    assert float(rows[0]["grad_error"]) < 10.0 / 32**2
    assert _json(tmp_path / "example.json")["example"]["id"] == "sqrtlog"


def test_example_epsilon_sweep(test_data, tmp_path):
    assert _run(test_data, tmp_path, "example_epsilon.ini") == 0
    sweeps = {}
    for row in _csv(tmp_path / "example_epsilon.csv"):
        sweeps.setdefault(float(row["resolution"]), []).append(row)
    assert sorted(sweeps) == [16.0, 32.0]
    for rows in sweeps.values():
        assert [float(row["epsilon"]) for row in rows] == [0.4, 0.2, 0.1, 0.05]
        energies = np.array([float(row["w0"]) for row in rows])
        assert np.all(np.diff(energies) < 0.0)
        assert math.isnan(float(rows[0]["ratio"]))
        assert 3.0 <= float(rows[-1]["ratio"]) <= 5.0
    slopes = [float(sweeps[n][0]["max_slope"]) for n in (16.0, 32.0)]
    assert slopes[1] > slopes[0]


def test_epsilon_sweep_needs_an_amplitude_example(test_data, tmp_path, capsys):
    assert _run(test_data, tmp_path, "example_epsilon_radial.ini") == 2
    assert "no amplitude to sweep" in capsys.readouterr().err


@pytest.mark.slow
def test_relax_command(test_data, tmp_path):
    assert _run(test_data, tmp_path, "relax_logloglinear.ini") == 0
    rows = _csv(tmp_path / "relax.csv")
    assert [int(row["index"]) for row in rows] == [1, 2]
    summary = _json(tmp_path / "relax.json")
    assert summary["lsc"]["energies"] == pytest.approx(
        [float(row["w0"]) for row in rows], rel=1e-12
    )


def test_seed_and_resolution_overrides(test_data, tmp_path):
    status = _run(
        test_data,
        tmp_path,
        "sphere_cap_energy.ini",
        "--seed",
        "4",
        "--resolutions",
        "8",
    )
    assert status == 0
    assert len(_csv(tmp_path / "energy.csv")) == 1
