"""
CSV dumps of matrices and instance vectors.

One matrix row per line, comma separated, no header unless labels are given.
Numbers are written in their shortest round-trip decimal form so that
parse -> emit reproduces a dump byte for byte.
"""
import csv
import re
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import MatrixFormatError

POSITIONAL_RANGE = (1e-4, 1e16)  # magnitudes written without an exponent

# plain ASCII decimals; nan and inf are let through to get their own message
NUMBER = re.compile(r"[+-]?((\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?|nan|inf|infinity)", re.ASCII | re.IGNORECASE)


def format_number(value: float) -> str:
    """Shortest decimal string that parses back to exactly the same float64.

    Example:
        format_number(1.0) -> "1", format_number(0.25) -> "0.25", format_number(1e-5) -> "1e-05"
    """
    value = float(value) + 0.0  # -0.0 prints as 0
    if not np.isfinite(value):
        raise MatrixFormatError(f"cannot write non-finite value {value}")
    magnitude = abs(value)
    if magnitude == 0.0 or POSITIONAL_RANGE[0] <= magnitude < POSITIONAL_RANGE[1]:
        return np.format_float_positional(value, unique=True, trim="-")
    return np.format_float_scientific(value, unique=True, trim="-")


def emit_matrix(matrix, header: Optional[Sequence[str]] = None) -> str:
    """CSV text of a matrix (a vector is written as a single row), without a trailing newline."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[None, :]
    if matrix.ndim != 2:
        raise MatrixFormatError(f"can only write vectors and matrices, got shape {matrix.shape}")
    lines = []
    if header is not None:
        if len(header) != matrix.shape[1]:
            raise MatrixFormatError(f"{len(header)} labels for {matrix.shape[1]} columns")
        lines.append(",".join(str(label) for label in header))
    for r, row in enumerate(matrix, start=1):
        try:
            lines.append(",".join(format_number(v) for v in row))
        except MatrixFormatError as e:
            bad = int(np.flatnonzero(~np.isfinite(row))[0]) + 1
            raise MatrixFormatError(str(e), column=bad, row=r) from e
    return "\n".join(lines)


def _split(text: str, row: Optional[int] = None) -> List[str]:
    try:
        return [token.strip() for token in next(csv.reader([text]))]
    except csv.Error as e:
        raise MatrixFormatError(f"bad CSV line: {e}", row=row)


def parse_vector(text: str, row: Optional[int] = None) -> np.ndarray:
    """Parse one CSV line of decimals; whitespace around tokens is ignored.

    Only ASCII decimal notation is read: "1_0" or non-ASCII digits are malformed
    even though float() would take them.

    Raises:
        MatrixFormatError: empty input or a token that is not a finite number,
            with its 1-based column
    """
    text = text.strip()
    if not text:
        raise MatrixFormatError("empty vector", row=row)
    values = []
    for column, token in enumerate(_split(text, row), start=1):
        if not NUMBER.fullmatch(token):
            raise MatrixFormatError(f"malformed number '{token}'", column=column, row=row)
        value = float(token)
        if not np.isfinite(value):
            raise MatrixFormatError(f"non-finite number '{token}'", column=column, row=row)
        values.append(value)
    return np.array(values, dtype=np.float64)


def parse_matrix(text: str, header: bool = False) -> Tuple[np.ndarray, Optional[List[str]]]:
    """Parse a CSV dump back into a matrix; returns (matrix, labels or None).

    Blank lines are skipped. Rows must all have the same length.
    """
    lines = [(i, line) for i, line in enumerate(text.splitlines(), start=1) if line.strip()]
    labels = None
    if header:
        if not lines:
            raise MatrixFormatError("missing header row")
        labels = _split(lines[0][1], row=lines[0][0])
        lines = lines[1:]
    if not lines:
        raise MatrixFormatError("no data rows")
    rows = [parse_vector(line, row=i) for i, line in lines]
    width = len(rows[0])
    for (i, _), values in zip(lines, rows):
        if len(values) != width:
            raise MatrixFormatError(f"row has {len(values)} values, expected {width}", row=i)
    if labels is not None and len(labels) != width:
        raise MatrixFormatError(f"header has {len(labels)} labels for {width} columns")
    return np.vstack(rows), labels


def read_instance(source: str) -> np.ndarray:
    """Instance from an inline CSV string or, with a leading '@', from a file holding one CSV line.

    Raises:
        OSError: the file cannot be read
        MatrixFormatError: the file is not UTF-8, holds other than one line, or the line is malformed
    """
    if source.startswith("@"):
        with open(source[1:], "rb") as file:
            data = file.read()
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MatrixFormatError(f"{source[1:]} is not UTF-8: {e}")
        lines = [line for line in text.splitlines() if line.strip()]
        if len(lines) != 1:
            raise MatrixFormatError(f"{source[1:]} must hold exactly one CSV line, found {len(lines)}")
        return parse_vector(lines[0])
    return parse_vector(source)
