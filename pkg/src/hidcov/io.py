"""Dataset ingestion and report serialization for the command line."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import IO, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataParseError

__all__ = [
    "ReportRecord",
    "SimulationRecord",
    "load_dataset",
    "parse_dataset",
    "write_records",
    "records_from_json",
    "records_from_csv",
]


@dataclass
class ReportRecord:
    test: str
    h: Optional[int]
    a: Optional[float]
    c: Optional[float]
    B: Optional[int]
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    n: int
    p: int
    seed: Optional[int]
    wall_time_ms: Optional[float]
    numerator: Optional[float] = None
    s_hat_sq: Optional[float] = None


@dataclass
class SimulationRecord:
    scenario: str
    test: str
    n: int
    p: int
    rho: Optional[float]
    alpha: float
    replications: int
    permutations: Optional[int]
    seed: int
    rejection_rate: float
    mc_standard_error: float
    wall_time_ms: Optional[float]


def _parse_float(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


def parse_dataset(stream: IO[str], transpose: bool = False, source: str = "<input>") -> Tuple[np.ndarray, Optional[List[str]]]:
    """Parse comma-separated numbers, rows are observations.

    A first row in which no cell parses as a number is taken as a header.
    Blank lines are skipped. Errors carry 1-based line and column numbers.

    Returns
    -------
    data : numpy.ndarray, shape (n, p)
    header : list of str or None
    """
    header = None
    rows: List[List[float]] = []
    width = None
    for lineno, cells in enumerate(csv.reader(stream), start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        if header is None and not rows and all(_parse_float(c) is None for c in cells):
            header = [c.strip() for c in cells]
            width = len(header)
            continue
        if width is None:
            width = len(cells)
        if len(cells) != width:
            raise DataParseError(
                f"{source}: line {lineno} has {len(cells)} fields, expected {width}", row=lineno
            )
        values = []
        for col, cell in enumerate(cells, start=1):
            value = _parse_float(cell.strip())
            if value is None:
                raise DataParseError(
                    f"{source}: non-numeric value {cell!r} at line {lineno}, column {col}",
                    row=lineno, column=col,
                )
            if not math.isfinite(value):
                raise DataParseError(
                    f"{source}: non-finite value {cell!r} at line {lineno}, column {col}",
                    row=lineno, column=col,
                )
            values.append(value)
        rows.append(values)
    if not rows:
        raise DataParseError(f"{source}: no data rows")
    data = np.array(rows, dtype=np.float64)
    if transpose:
        data = data.T
        header = None
    if data.shape[0] < 4:
        raise DataParseError(f"{source}: need at least 4 observations, got {data.shape[0]}")
    return data, header


def load_dataset(path: str, transpose: bool = False):
    """Read a dataset file; see :func:`parse_dataset`."""
    with open(path, newline="") as fh:
        return parse_dataset(fh, transpose=transpose, source=path)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest repr round-trips exactly
    return str(value)


def write_records(records: Sequence, out: IO[str], fmt: str = "json") -> None:
    """Write dataclass records as JSON lines or CSV with a header row.

    Floats are written with their shortest round-trip representation.
    """
    if fmt == "json":
        for rec in records:
            out.write(json.dumps(asdict(rec), default=_json_default, allow_nan=False))
            out.write("\n")
    elif fmt == "csv":
        if not records:
            return
        names = [f.name for f in fields(records[0])]
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(names)
        for rec in records:
            writer.writerow([_csv_cell(getattr(rec, k)) for k in names])
    else:
        raise ValueError(f"unknown format {fmt!r}")


def records_from_json(text: str, cls=ReportRecord) -> list:
    return [cls(**json.loads(line)) for line in text.splitlines() if line.strip()]


def _typed(field_type: str, cell: str):
    if cell == "":
        return None
    if "bool" in field_type:
        return cell == "true"
    if "int" in field_type:
        return int(cell)
    if "float" in field_type:
        return float(cell)
    return cell


def records_from_csv(text: str, cls=ReportRecord) -> list:
    types = {f.name: str(f.type) for f in fields(cls)}
    reader = csv.DictReader(io.StringIO(text))
    return [cls(**{k: _typed(types[k], v) for k, v in row.items()}) for row in reader]
