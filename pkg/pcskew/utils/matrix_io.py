"""
Delimited-text matrix ingestion

Accepts comma, tab or whitespace separated numeric tables with an optional
header row. Cells are read as text first so that problems can be reported
with their line and column.
"""

import logging
import re
from enum import Enum
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from ..core import matrix
from ..core.matrix import DataMatrix
from ..errors import (
    EmptyInputError,
    InputNotFoundError,
    MissingValueError,
    ParseError,
    RaggedRowsError,
)


logger = logging.getLogger(__name__)

WHITESPACE = r'\s+'
MISSING_TOKENS = frozenset({'', 'na', 'n/a', 'nan', 'null', 'none', '?'})
DELIMITER_NAMES = {'comma': ',', 'tab': '\t', 'space': WHITESPACE, 'whitespace': WHITESPACE}

_LINE_PATTERN = re.compile(r'line (\d+)')


class Orientation(str, Enum):
    ROWS = "rows"          # one observation per row
    COLUMNS = "columns"    # one observation per column

    @classmethod
    def parse(cls, value) -> Optional["Orientation"]:
        if value is None or isinstance(value, cls):
            return value
        key = str(value).lower()
        if key in ('observations-in-rows', 'row'):
            key = 'rows'
        elif key in ('observations-in-columns', 'column', 'cols'):
            key = 'columns'
        try:
            return cls(key)
        except ValueError:
            raise ParseError(f"Unknown orientation {value!r} (expected 'rows' or 'columns')")


def _resolve_delimiter(delimiter: Optional[str], first_line: str) -> str:
    if delimiter:
        return DELIMITER_NAMES.get(delimiter, '\t' if delimiter == '\\t' else delimiter)
    if ',' in first_line:
        return ','
    if '\t' in first_line:
        return '\t'
    return WHITESPACE


def _source_lines(text: str) -> List[int]:
    """1-based file line numbers of the non-blank lines"""
    return [i for i, line in enumerate(text.splitlines(), start=1) if line.strip()]


def _read_cells(path, delimiter: Optional[str], header: bool) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"Input file not found: {path}", path=str(path))

    text = path.read_text(encoding='utf-8-sig')
    lines = _source_lines(text)
    if not lines or (header and len(lines) < 2):
        raise EmptyInputError(f"Input file has no data rows: {path}", path=str(path))
    first = text.splitlines()[lines[0] - 1]
    sep = _resolve_delimiter(delimiter, first)

    try:
        frame = pd.read_csv(
            path,
            sep=sep,
            header=0 if header else None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            encoding='utf-8-sig',
        )
    except pd.errors.EmptyDataError:
        raise EmptyInputError(f"Input file has no data rows: {path}", path=str(path))
    except pd.errors.ParserError as e:
        found = _LINE_PATTERN.search(str(e))
        line = int(found.group(1)) if found else None
        raise RaggedRowsError(f"Rows of unequal length in {path}: {e}", line=line)

    if frame.shape[0] == 0:
        raise EmptyInputError(f"Input file has no data rows: {path}", path=str(path))

    offset = 1 if header else 0
    cells = frame.to_numpy(dtype=object)

    # Short rows come back padded with NaN
    padded = frame.isna().to_numpy()
    if padded.any():
        row = int(np.flatnonzero(padded.any(axis=1))[0])
        line = lines[row + offset] if row + offset < len(lines) else None
        raise RaggedRowsError(
            f"Row at line {line} has {int((~padded[row]).sum())} fields, expected {cells.shape[1]}",
            line=line,
        )

    try:
        values = cells.astype(float)
        if np.all(np.isfinite(values)):
            return values
    except ValueError:
        pass

    # Slow path: locate the first offending cell
    for r in range(cells.shape[0]):
        for c in range(cells.shape[1]):
            token = str(cells[r, c]).strip()
            line = lines[r + offset] if r + offset < len(lines) else None
            if token.lower() in MISSING_TOKENS:
                raise MissingValueError(
                    f"Missing value {token!r} at line {line}, column {c + 1}",
                    line=line, column=c + 1, token=token,
                )
            try:
                value = float(token)
            except ValueError:
                raise ParseError(
                    f"Non-numeric value {token!r} at line {line}, column {c + 1}",
                    line=line, column=c + 1, token=token,
                )
            if not np.isfinite(value):
                raise ParseError(
                    f"Non-finite value {token!r} at line {line}, column {c + 1}",
                    line=line, column=c + 1, token=token,
                )
    raise ParseError(f"Could not interpret {path} as a numeric table")


def read_matrix(path, delimiter: Optional[str] = None, orientation=None,
                header: bool = False, center: bool = False,
                standardize: bool = False) -> DataMatrix:
    """Read a numeric table and normalize it to one observation per row"""
    values = _read_cells(path, delimiter, header)
    parsed = Orientation.parse(orientation)
    if parsed is Orientation.COLUMNS:
        values = values.T

    n, d = values.shape
    if parsed is None and n > d:
        logger.warning(
            f"{path}: {n} rows and {d} columns, more observations than variables; "
            "if observations are in columns pass --orientation columns"
        )

    X = DataMatrix(values)
    if center:
        X = matrix.center_columns(X)
    if standardize:
        X = matrix.standardize_columns(X)
    logger.debug(f"Read {path}: n={X.n}, d={X.d}")
    return X


def read_scores(path, delimiter: Optional[str] = None, header: bool = False) -> np.ndarray:
    """Read an n x r table of principal component scores, one observation per row"""
    scores = _read_cells(path, delimiter, header)
    logger.debug(f"Read scores {path}: n={scores.shape[0]}, r={scores.shape[1]}")
    return scores
