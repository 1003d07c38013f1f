# -*- coding: utf-8 -*-
"""
Unit tests of configuration parsing, typing, defaults and validation.
"""
import pytest

from graph_willmore.config import DEFAULTS, load_config, parse
from graph_willmore.errors import ConfigurationError

MINIMAL = "[experiment]\ncommand = energy\n"


def test_defaults_are_filled_in():
    values, _ = parse(MINIMAL)
    assert values["experiment"]["seed"] == 0
    assert values["domain"]["shape"] == "disk"
    assert values["domain"]["resolutions"] == [16.0, 32.0, 64.0]
    assert values["minimize"] == DEFAULTS["minimize"]


def test_values_are_typed():
    values, _ = parse(
        MINIMAL
        + "[domain]\nshape = annulus\nn_theta = 64\nresolutions = 8, 16\n"
        + "[example]\noracle = yes\np = 1, 1.5\n"
    )
    assert values["domain"]["n_theta"] == 64
    assert values["domain"]["resolutions"] == [8.0, 16.0]
    assert values["domain"]["inner_radius"] == 0.5
    assert values["example"]["oracle"] is True
    assert values["example"]["p"] == [1.0, 1.5]


def test_overrides_are_typed_like_file_values():
    values, _ = parse(
        MINIMAL,
        {("domain", "resolutions"): "8, 16", ("experiment", "seed"): 5},
    )
    assert values["domain"]["resolutions"] == [8.0, 16.0]
    assert values["experiment"]["seed"] == 5


@pytest.mark.parametrize(
    "text, section, key, line, message",
    [
        (
            MINIMAL + "colour = red\n",
            "experiment",
            "colour",
            3,
            "unknown key",
        ),
        (
            MINIMAL + "[plot]\nwidth = 3\n",
            "plot",
            None,
            3,
            "unknown section",
        ),
        (
            "[domain]\nshape = disk\n",
            "experiment",
            "command",
            None,
            "missing key",
        ),
        (
            MINIMAL + "[domain]\nresolutions = 16, abc\n",
            "domain",
            "resolutions",
            4,
            "cannot read",
        ),
        (
            MINIMAL + "[domain]\n\nresolutions = 32, 16\n",
            "domain",
            "resolutions",
            5,
            "increase strictly",
        ),
        (
            MINIMAL + "[domain]\nshape = annulus\ninner_radius = 2\n",
            "domain",
            "inner_radius",
            5,
            "must be below radius",
        ),
        (
            MINIMAL + "[minimize]\nbacktrack = 1.5\n",
            "minimize",
            "backtrack",
            4,
            "maximum",
        ),
    ],
    ids=[
        "unknown-key",
        "unknown-section",
        "missing-command",
        "bad-number",
        "decreasing-resolutions",
        "annulus-radii",
        "out-of-range",
    ],
)
def test_errors_name_their_origin(text, section, key, line, message):
    with pytest.raises(ConfigurationError, match=message) as raised:
        parse(text)
    error = raised.value
    assert error.section == section
    assert error.key == key
    assert error.line == line


def test_error_text_leads_with_the_line():
    with pytest.raises(ConfigurationError) as raised:
        parse(MINIMAL + "colour = red\n")
    assert str(raised.value) == "line 3: [experiment] colour: unknown key"


def test_missing_section_header():
    with pytest.raises(ConfigurationError, match="malformed") as raised:
        parse("command = energy\n")
    assert raised.value.line == 1


def test_negative_resolution_file(test_data):
    with pytest.raises(ConfigurationError) as raised:
        load_config(test_data / "bad_negative_resolution.ini")
    assert raised.value.line == 6
    assert raised.value.section == "domain"
    assert raised.value.key == "resolutions"


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_config(tmp_path / "absent.ini")


def test_config_hash(test_data):
    path = test_data / "sphere_cap_energy.ini"
    first = load_config(path)
    assert load_config(path).config_hash == first.config_hash
    reseeded = load_config(path, {("experiment", "seed"): 9})
    assert reseeded.config_hash != first.config_hash
    assert first.command == "energy"
    assert first.grid_parameters()["h"] == [1.0 / 16, 1.0 / 32]
