# -*- coding: utf-8 -*-
#
# This file is part of the Graph Willmore project
#
# BSD-3-Clause
#
# Distributed under the terms of the BSD-3-Clause license.
# See LICENSE.txt for more info.

""" JSON and CSV report writers.

Floats are written with 17 significant digits (``repr`` in JSON,
``%.17g`` in CSV) so every number round-trips exactly. Every JSON report
embeds the configuration hash and the grid parameters of the run.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import logging
import math
import pathlib
import threading

import attrs
import numpy as np

# pylint: disable=logging-fstring-interpolation

__all__ = [
    "canonical_json",
    "config_hash",
    "jsonable",
    "format_number",
    "field_rows",
    "ReportWriter",
]

logger = logging.getLogger(__name__)


def jsonable(value):
    """Convert numpy, attrs and enum values to plain JSON types."""
    if attrs.has(type(value)):
        if hasattr(value, "as_dict"):
            return jsonable(value.as_dict())
        return jsonable(attrs.asdict(value, recurse=False))
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [jsonable(item) for item in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, pathlib.Path):
        return str(value)
    return value


def canonical_json(value) -> str:
    return json.dumps(jsonable(value), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON of a validated configuration."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def format_number(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return "%.17g" % value
    if isinstance(value, enum.Enum):
        return str(value.value)
    return str(value)


def field_rows(field, name: str = "u"):
    """Rows ``x, y, <name>, node_class`` of a nodal field."""
    domain = field.domain
    for index in zip(*np.nonzero(domain.available)):
        yield {
            "x": domain.x[index],
            "y": domain.y[index],
            name: field.values[index],
            "node_class": int(domain.node_class[index]),
        }


class ReportWriter:
    """
    Writes the reports of one run into an output directory.

    Writes are serialized so drivers may call the writer from worker
    threads.
    """

    def __init__(
        self, output: str | pathlib.Path, config_digest: str, grid: dict
    ) -> None:
        self.output = pathlib.Path(output)
        self.config_hash = config_digest
        self.grid = grid
        self.written = []
        self._lock = threading.Lock()
        self.output.mkdir(parents=True, exist_ok=True)

    def write_json(self, name: str, payload: dict) -> pathlib.Path:
        document = dict(jsonable(payload))
        document["config_hash"] = self.config_hash
        document["grid"] = jsonable(self.grid)
        path = self.output / name
        text = json.dumps(document, sort_keys=True, indent=2)
        with self._lock:
            path.write_text(text + "\n", encoding="utf-8")
            self.written.append(path)
        logger.info(f"report written: {path}")
        return path

    def write_csv(self, name: str, rows, columns=None) -> pathlib.Path:
        rows = list(rows)
        if columns is None:
            columns = []
            for row in rows:
                columns.extend(key for key in row if key not in columns)
        path = self.output / name
        with self._lock:
            with path.open("w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(columns)
                for row in rows:
                    writer.writerow(
                        format_number(row.get(column, ""))
                        for column in columns
                    )
            self.written.append(path)
        logger.info(f"table written: {path} ({len(rows)} rows)")
        return path
