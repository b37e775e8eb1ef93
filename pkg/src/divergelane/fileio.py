"""Text file formats: coefficient files and dataset CSVs.

Coefficient files are ``key = value`` lines (``#`` comments and blank lines
allowed) for the eight coefficients, plus an optional ``symmetry = true``
flag that fills in or checks the mirrored entries.  Datasets are plain CSV
with the fixed header ``k,q1,q2,xf1,xb1,xf2,xb2,total_demand_vph``.  Floats
are serialized with ``repr`` so parse(serialize(x)) == x exactly.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .calibration import DataPoint
from .model import CostCoefficients, DemandConfig, FlowDistribution

COEFFICIENT_KEYS = ("cf1", "cf2", "cb", "lambda1", "lambda2", "mu1", "mu2", "nu")
DATASET_HEADER = "k,q1,q2,xf1,xb1,xf2,xb2,total_demand_vph"

#: With ``symmetry = true`` these keys may be omitted and are copied from
#: their source key; if present they must match it.
_SYMMETRY_MIRRORS = {"cf2": "cf1", "cb": "cf1", "lambda2": "lambda1", "mu2": "mu1"}


class ParseError(ValueError):
    """Input file is malformed; carries a line number for diagnostics."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def parse_coefficients(text: str) -> CostCoefficients:
    """Parse a coefficients document, applying the symmetry flag if set."""
    values: dict[str, float] = {}
    value_lines: dict[str, int] = {}
    symmetry = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if key == "symmetry":
            if value_text.lower() not in ("true", "false"):
                raise ParseError(f"symmetry must be true or false, got {value_text!r}", lineno)
            symmetry = value_text.lower() == "true"
            continue
        if key not in COEFFICIENT_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = float(value_text)
        except ValueError:
            raise ParseError(f"invalid number {value_text!r} for {key!r}", lineno) from None
        value_lines[key] = lineno
    if symmetry:
        for key, source in _SYMMETRY_MIRRORS.items():
            if source not in values:
                continue
            if key in values:
                if values[key] != values[source]:
                    raise ParseError(
                        f"symmetry requires {key} = {source}, got {values[key]!r} != {values[source]!r}",
                        value_lines[key],
                    )
            else:
                values[key] = values[source]
    missing = [key for key in COEFFICIENT_KEYS if key not in values]
    if missing:
        raise ParseError(f"missing key {missing[0]!r}")
    try:
        return CostCoefficients(**values)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def load_coefficients(path: str | Path) -> CostCoefficients:
    return parse_coefficients(Path(path).read_text())


def format_coefficients(c: CostCoefficients, symmetry: bool = False) -> str:
    lines = [f"{key} = {getattr(c, key)!r}" for key in COEFFICIENT_KEYS]
    if symmetry:
        lines.append("symmetry = true")
    return "\n".join(lines) + "\n"


def write_coefficients(path: str | Path, c: CostCoefficients, symmetry: bool = False) -> None:
    Path(path).write_text(format_coefficients(c, symmetry))


def parse_dataset(text: str) -> list[DataPoint]:
    """Parse a dataset CSV into validated data points."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != DATASET_HEADER:
        raise ParseError(f"expected header {DATASET_HEADER!r}", 1)
    points: list[DataPoint] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 8:
            raise ParseError(f"expected 8 comma-separated fields, got {len(fields)}", lineno)
        try:
            q1, q2, xf1, xb1, xf2, xb2, vph = (float(f) for f in fields[1:])
        except ValueError:
            raise ParseError(f"invalid number in row {fields[0]!r}", lineno) from None
        try:
            point = DataPoint(
                demand=DemandConfig(q1, q2),
                flow=FlowDistribution(xf1, xb1, xf2, xb2),
                total_demand_vph=vph,
            )
        except ValueError as exc:
            raise ParseError(f"row k={fields[0]}: {exc}", lineno) from exc
        points.append(point)
    return points


def load_dataset(path: str | Path) -> list[DataPoint]:
    return parse_dataset(Path(path).read_text())


def format_dataset(points: Sequence[DataPoint]) -> str:
    lines = [DATASET_HEADER]
    for k, p in enumerate(points, start=1):
        lines.append(
            f"{k},{p.demand.q1!r},{p.demand.q2!r},{p.flow.xf1!r},{p.flow.xb1!r},"
            f"{p.flow.xf2!r},{p.flow.xb2!r},{p.total_demand_vph!r}"
        )
    return "\n".join(lines) + "\n"


def write_dataset(path: str | Path, points: Sequence[DataPoint]) -> None:
    Path(path).write_text(format_dataset(points))
