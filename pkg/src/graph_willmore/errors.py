# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" Exception and warning types shared by all modules.
"""

from __future__ import annotations

__all__ = [
    "GraphWillmoreError",
    "ConfigurationError",
    "ParameterError",
    "ResolutionError",
    "PreconditionError",
    "NumericalFailure",
    "StagnationError",
    "DegenerateFieldWarning",
]


class GraphWillmoreError(Exception):
    """Base class of every error raised by the package."""


class ConfigurationError(GraphWillmoreError, ValueError):
    """
    Invalid configuration or geometry.

    :param message: human readable description
    :param section: config section the error refers to, if any
    :param key: config key the error refers to, if any
    :param line: 1-based line in the config file, if known
    """

    def __init__(
        self,
        message: str,
        section: str | None = None,
        key: str | None = None,
        line: int | None = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.section = section
        self.key = key
        self.line = line

    def __str__(self) -> str:
        prefix = ""
        if self.line is not None:
            prefix += f"line {self.line}: "
        if self.section is not None:
            prefix += f"[{self.section}]"
            if self.key is not None:
                prefix += f" {self.key}"
            prefix += ": "
        return f"{prefix}{self.message}"


class ParameterError(ConfigurationError):
    """A model parameter is outside its admissible set."""


class ResolutionError(ConfigurationError):
    """A length scale is not resolved by the grid."""


class PreconditionError(GraphWillmoreError, ValueError):
    """Inputs are individually valid but violate an operation contract."""


class NumericalFailure(GraphWillmoreError, RuntimeError):
    """
    A computation produced non-finite values or failed to progress.

    :param message: description
    :param diagnostics: JSON-serializable details for the failure report
    """

    def __init__(self, message: str, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StagnationError(NumericalFailure):
    """The line search failed too many consecutive times."""


class DegenerateFieldWarning(UserWarning):
    """The regular part of a field covers less than half of the domain."""