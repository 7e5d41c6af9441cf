"""
CSV reading and writing with round-trip float formatting.
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from ..models import DataFormatError

logger = logging.getLogger("betagan.csv")

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """Shortest decimal text that parses back to the identical float64."""
    return repr(float(value))


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_rows(path: PathLike, rows: Iterable[Sequence], header: Optional[Sequence[str]] = None) -> Path:
    """Write rows to a CSV file, creating parent directories."""
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])
    return out_path


def write_matrix(path: PathLike, matrix: np.ndarray) -> Path:
    """Write an N x d matrix, one row per line, no header."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    return write_rows(path, matrix.tolist())


def read_matrix(path: PathLike, expected_columns: Optional[int] = None) -> np.ndarray:
    """
    Read a headerless numeric CSV into an N x d float64 matrix.

    Raises:
        DataFormatError: on undecodable bytes, a non-numeric cell, a ragged
            row or an empty file, naming the offending line
    """
    in_path = Path(path)
    rows: List[List[float]] = []
    width = expected_columns
    with open(in_path, "rb") as f:
        for line_number, raw_line in enumerate(f, start=1):
            try:
                text = raw_line.decode("utf-8")
            except UnicodeDecodeError as e:
                raise DataFormatError(f"not valid UTF-8 ({e.reason})", path=str(in_path), line=line_number)
            row = next(csv.reader([text]), [])
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise DataFormatError(f"non-numeric value in row {row}", path=str(in_path), line=line_number)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise DataFormatError(
                    f"expected {width} columns, found {len(values)}", path=str(in_path), line=line_number
                )
            if not all(np.isfinite(values)):
                raise DataFormatError("non-finite value", path=str(in_path), line=line_number)
            rows.append(values)
    if not rows:
        raise DataFormatError("no data rows", path=str(in_path))
    logger.debug(f"Read {len(rows)} rows x {width} columns from {in_path}")
    return np.array(rows, dtype=np.float64)


def read_table(path: PathLike) -> List[dict]:
    """Read a CSV with a header row into a list of dicts of strings."""
    with open(Path(path), "r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
