# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Experiment configuration: INI parsing, typing, defaults and schema
validation.

Files use ``[section]`` headers and ``key = value`` lines; lists are
comma separated. Values are typed from the schema, defaults are filled
in and the result is validated against a Draft 2020-12 JSON schema.
Every error names the section, the key and the line it came from.
"""

from __future__ import annotations

import configparser
import copy
import logging
import pathlib
import re

import attrs
import jsonschema

from graph_willmore.common.reports import config_hash
from graph_willmore.errors import ConfigurationError

# pylint: disable=logging-fstring-interpolation

__all__ = ["ExperimentConfig", "SCHEMA", "DEFAULTS", "load_config", "parse"]

logger = logging.getLogger(__name__)

COMMANDS = ("energy", "verify", "example", "relax", "minimize", "sweep")

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NUMBER = {"type": "number"}
_POSITIVE_LIST = {
    "type": "array",
    "items": _POSITIVE,
    "minItems": 1,
}


def _section(properties: dict, required=()) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "required": list(required),
        "properties": properties,
    }


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": _section(
            {
                "command": {"enum": list(COMMANDS)},
                "output": {"type": "string", "minLength": 1},
                "seed": {"type": "integer", "minimum": 0},
                "workers": {"type": "integer", "minimum": 1},
            },
            required=("command",),
        ),
        "domain": _section(
            {
                "shape": {"enum": ["rectangle", "disk", "annulus"]},
                "mode": {"enum": ["cartesian", "polar"]},
                "radius": _POSITIVE,
                "inner_radius": _POSITIVE,
                "width": _POSITIVE,
                "height": _POSITIVE,
                "center_x": _NUMBER,
                "center_y": _NUMBER,
                "resolutions": _POSITIVE_LIST,
                "excision": {"type": "number", "minimum": 0},
                "n_theta": {"type": "integer", "minimum": 8},
            }
        ),
        "boundary": _section(
            {
                "family": {"enum": ["zero", "affine", "sphere_cap", "sine"]},
                "slope_x": _NUMBER,
                "slope_y": _NUMBER,
                "offset": _NUMBER,
                "sphere_radius": _POSITIVE,
                "amplitude": _NUMBER,
                "frequency": {"type": "integer", "minimum": 1},
                "samples": {"type": "integer", "minimum": 8},
            }
        ),
        "field": _section(
            {
                "kind": {
                    "enum": [
                        "boundary",
                        "zero",
                        "sphere_cap",
                        "bump",
                        "fourier",
                        "parabolic",
                        "example",
                    ]
                },
                "amplitude": _NUMBER,
            }
        ),
        "energy": _section(
            {
                "gamma": _NUMBER,
                "alpha": _NUMBER,
                "h0": _NUMBER,
                "extension_collar": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "exclusiveMaximum": 1,
                },
            }
        ),
        "example": _section(
            {
                "id": {
                    "enum": [
                        "logloglinear",
                        "radial_k",
                        "radial_k_cylinder",
                        "sqrtlog",
                    ]
                },
                "epsilon": _POSITIVE,
                "k": {"type": "integer", "minimum": 3},
                "jump": {"type": "number", "minimum": 0},
                "deltas": _POSITIVE_LIST,
                "p": _POSITIVE_LIST,
                "oracle": {"type": "boolean"},
                "epsilons": {"type": "array", "items": _POSITIVE},
            }
        ),
        "relax": _section(
            {
                "sigma0": _POSITIVE,
                "members": {"type": "integer", "minimum": 1},
                "tolerance_factor": _POSITIVE,
            }
        ),
        "minimize": _section(
            {
                "mode": {"enum": ["dirichlet", "navier"]},
                "initial": {"enum": ["phi-extension", "zero", "bump"]},
                "bump_amplitude": _NUMBER,
                "max_iterations": {"type": "integer", "minimum": 1},
                "initial_step": _POSITIVE,
                "backtrack": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "exclusiveMaximum": 1,
                },
                "armijo": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "exclusiveMaximum": 1,
                },
                "gradient_tolerance": _POSITIVE,
                "energy_tolerance": _POSITIVE,
                "max_failures": {"type": "integer", "minimum": 1},
                "starts": {"type": "integer", "minimum": 1},
                "difference": {"enum": ["central", "forward"]},
            }
        ),
    },
}

DEFAULTS = {
    "experiment": {"output": "out", "seed": 0, "workers": 1},
    "domain": {
        "shape": "disk",
        "mode": "cartesian",
        "radius": 1.0,
        "center_x": 0.0,
        "center_y": 0.0,
        "resolutions": [16.0, 32.0, 64.0],
        "excision": 0.0,
    },
    "boundary": {
        "family": "zero",
        "slope_x": 0.0,
        "slope_y": 0.0,
        "offset": 0.0,
        "sphere_radius": 2.0,
        "amplitude": 0.0,
        "frequency": 2,
    },
    "field": {"kind": "boundary", "amplitude": 0.1},
    "energy": {"gamma": 0.0, "alpha": 0.0, "h0": 0.0, "extension_collar": 0.2},
    "example": {
        "id": "logloglinear",
        "epsilon": 1.0,
        "k": 3,
        "jump": 1.0,
        "deltas": [0.4, 0.2, 0.1],
        "p": [1.0],
        "oracle": False,
        "epsilons": [],
    },
    "relax": {"sigma0": 0.4, "members": 3, "tolerance_factor": 1.0},
    "minimize": {
        "mode": "dirichlet",
        "initial": "bump",
        "bump_amplitude": 0.1,
        "max_iterations": 200,
        "initial_step": 1e-2,
        "backtrack": 0.5,
        "armijo": 1e-4,
        "gradient_tolerance": 1e-8,
        "energy_tolerance": 1e-14,
        "max_failures": 50,
        "starts": 1,
        "difference": "central",
    },
}

_SHAPE_DEFAULTS = {
    "rectangle": {"width": 1.0, "height": 1.0},
    "annulus": {"inner_radius": 0.5},
}

_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_LINE = re.compile(r"^\s*([^\s=:#;\[][^=:]*?)\s*[=:]")
_BOOLEANS = configparser.RawConfigParser.BOOLEAN_STATES


@attrs.define(frozen=True)
class ExperimentConfig:
    """A validated experiment configuration."""

    values: dict
    config_hash: str
    path: pathlib.Path | None = None

    def section(self, name: str) -> dict:
        return dict(self.values.get(name, {}))

    @property
    def command(self) -> str:
        return self.values["experiment"]["command"]

    @property
    def seed(self) -> int:
        return self.values["experiment"]["seed"]

    @property
    def output(self) -> pathlib.Path:
        return pathlib.Path(self.values["experiment"]["output"])

    @property
    def workers(self) -> int:
        return self.values["experiment"]["workers"]

    @property
    def resolutions(self) -> list:
        return list(self.values["domain"]["resolutions"])

    def grid_parameters(self) -> dict:
        domain = self.values["domain"]
        return {
            "shape": domain["shape"],
            "mode": domain["mode"],
            "resolutions": domain["resolutions"],
            "h": [1.0 / n for n in domain["resolutions"]],
        }


def _line_map(text: str) -> dict:
    """``(section, key) -> line`` and ``(section, None) -> line``."""
    lines = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        match = _SECTION_LINE.match(line)
        if match:
            section = match.group(1).strip()
            lines.setdefault((section, None), number)
            continue
        match = _KEY_LINE.match(line)
        if match and section is not None:
            lines.setdefault((section, match.group(1).strip().lower()), number)
    return lines


def _convert_scalar(text: str, entry: dict):
    kind = entry.get("type")
    if kind == "integer":
        return int(text)
    if kind == "number":
        return float(text)
    if kind == "boolean":
        lowered = text.lower()
        if lowered not in _BOOLEANS:
            raise ValueError(f"not a boolean: {text!r}")
        return _BOOLEANS[lowered]
    return text


def _convert(text: str, entry: dict):
    text = text.strip()
    if entry.get("type") == "array":
        items = [item.strip() for item in text.split(",") if item.strip()]
        return [_convert_scalar(item, entry["items"]) for item in items]
    return _convert_scalar(text, entry)


def _typed(raw: dict, lines: dict) -> dict:
    values = {}
    for section, entries in raw.items():
        schema = SCHEMA["properties"].get(section, {})
        properties = schema.get("properties", {})
        typed = {}
        for key, text in entries.items():
            entry = properties.get(key, {})
            try:
                typed[key] = _convert(text, entry)
            except ValueError as exc:
                raise ConfigurationError(
                    f"cannot read {text!r} as {entry.get('type')}: {exc}",
                    section=section,
                    key=key,
                    line=lines.get((section, key)),
                ) from exc
        values[section] = typed
    return values


def _with_defaults(values: dict) -> dict:
    merged = copy.deepcopy(DEFAULTS)
    for section, entries in values.items():
        merged.setdefault(section, {}).update(entries)
    shape = merged["domain"].get("shape")
    for key, value in _SHAPE_DEFAULTS.get(shape, {}).items():
        merged["domain"].setdefault(key, value)
    return merged


def _raise_schema_error(error, lines: dict) -> None:
    path = list(error.absolute_path)
    section = path[0] if path else None
    key = path[1] if len(path) > 1 else None
    message = error.message
    if error.validator == "additionalProperties":
        known = set(error.schema.get("properties", {}))
        unexpected = sorted(set(error.instance) - known)
        if unexpected:
            if section is None:
                section = unexpected[0]
                message = "unknown section"
            else:
                key = unexpected[0]
                message = "unknown key"
    elif error.validator == "required" and section is None:
        section = error.validator_value[0]
        message = "missing section"
    elif error.validator == "required":
        key = next(
            (
                name
                for name in error.validator_value
                if name not in error.instance
            ),
            None,
        )
        message = "missing key"
    line = lines.get((section, key)) or lines.get((section, None))
    raise ConfigurationError(message, section=section, key=key, line=line)


def validate(values: dict, lines: dict | None = None) -> dict:
    """
    Validate a typed configuration against :data:`SCHEMA` and the
    cross-field rules.

    :raises ConfigurationError: on the first error (in document order)
    """
    lines = lines or {}
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(
        validator.iter_errors(values),
        key=lambda error: [str(part) for part in error.absolute_path],
    )
    if errors:
        _raise_schema_error(errors[0], lines)
    resolutions = values["domain"]["resolutions"]
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ConfigurationError(
            f"resolutions must increase strictly, got {resolutions}",
            section="domain",
            key="resolutions",
            line=lines.get(("domain", "resolutions")),
        )
    domain = values["domain"]
    if (
        domain["shape"] == "annulus"
        and domain["inner_radius"] >= domain["radius"]
    ):
        raise ConfigurationError(
            f"inner_radius {domain['inner_radius']} must be below radius "
            f"{domain['radius']}",
            section="domain",
            key="inner_radius",
            line=lines.get(("domain", "inner_radius")),
        )
    return values


def parse(text: str, overrides: dict | None = None) -> tuple:
    """
    Parse INI text into a typed, defaulted and validated dictionary.

    :param overrides: ``{(section, key): value}`` applied after typing;
        string values are typed like file values
    :return: ``(values, line map)``
    :raises ConfigurationError: on syntax, type or schema errors
    """
    lines = _line_map(text)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(
            f"malformed configuration: {exc.message}",
            line=getattr(exc, "lineno", None),
        ) from exc
    raw = {name: dict(parser.items(name)) for name in parser.sections()}
    values = _typed(raw, lines)
    for (section, key), value in (overrides or {}).items():
        if isinstance(value, str):
            value = _typed({section: {key: value}}, {})[section][key]
        values.setdefault(section, {})[key] = value
    values = _with_defaults(values)
    return validate(values, lines), lines


def load_config(
    path: str | pathlib.Path, overrides: dict | None = None
) -> ExperimentConfig:
    """
    Read, type and validate a configuration file.

    :raises ConfigurationError: if the file is missing or invalid
    """
    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    values, _ = parse(text, overrides)
    digest = config_hash(values)
    logger.info(f"configuration {path} loaded, hash {digest[:12]}")
    return ExperimentConfig(values=values, config_hash=digest, path=path)
