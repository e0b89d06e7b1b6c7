"""
Feature matrix files.
LAMeL Toolkit - Feature I/O Module

Two on-disk layouts:
- Sparse text: header ``rows cols nnz max_size``, then ``row col count``
  triples, then ``index canonical_form`` vocabulary lines
- Dense CSV via pandas, one column per canonical form (refused above a
  column limit)
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import sparse

from core.exceptions import FormatError
from .graphlets import FeatureMatrix, FingerprintVocabulary

logger = logging.getLogger(__name__)

IDS_FILE = 'ids.csv'


def write_feature_matrix(path, features):
    """Write a FeatureMatrix in the sparse text layout."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = features.entries()
    with path.open('w', encoding='utf-8') as handle:
        handle.write(f"{features.rows} {features.cols} {len(entries)} {features.vocabulary.max_size}\n")
        for row, col, count in entries:
            handle.write(f"{row} {col} {count}\n")
        for index, form in enumerate(features.vocabulary.forms()):
            handle.write(f"{index} {form}\n")
    logger.info("Wrote %dx%d feature matrix (%d nonzeros) to %s",
                features.rows, features.cols, len(entries), path)
    return path


def read_feature_matrix(path, row_ids=None):
    """
    Read the sparse text layout back into a FeatureMatrix.

    Row ids come from ``row_ids``, else from the ``id`` column of an ids.csv
    next to the file, else they are the 0-based row positions.

    Raises:
        FormatError: Header and body disagree, or a line is malformed
    """
    path = Path(path)
    lines = path.read_text(encoding='utf-8').splitlines()
    if not lines:
        raise FormatError(f"{path}: empty feature file")
    try:
        rows, cols, nnz, max_size = (int(token) for token in lines[0].split())
    except ValueError as exc:
        raise FormatError(f"{path}: bad header {lines[0]!r}") from exc

    body = lines[1:]
    if len(body) != nnz + cols:
        raise FormatError(f"{path}: expected {nnz} entries and {cols} vocabulary lines, found {len(body)} lines")

    row_idx, col_idx, data = [], [], []
    for number, line in enumerate(body[:nnz], start=2):
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{path}:{number}: expected 'row col count'")
        try:
            row, col, count = (int(part) for part in parts)
        except ValueError as exc:
            raise FormatError(f"{path}:{number}: non-integer entry") from exc
        if not (0 <= row < rows and 0 <= col < cols) or count < 0:
            raise FormatError(f"{path}:{number}: entry out of range")
        row_idx.append(row)
        col_idx.append(col)
        data.append(count)

    forms = []
    for number, line in enumerate(body[nnz:], start=nnz + 2):
        index, _, form = line.partition(' ')
        if not index.isdigit() or int(index) != len(forms) or not form:
            raise FormatError(f"{path}:{number}: expected 'index canonical_form'")
        forms.append(form)

    matrix = sparse.csr_matrix(
        (np.asarray(data, dtype=np.int64), (np.asarray(row_idx, dtype=np.int64), np.asarray(col_idx, dtype=np.int64))),
        shape=(rows, cols),
        dtype=np.int64,
    )
    if row_ids is None:
        row_ids = read_row_ids(path.with_name(IDS_FILE), rows)
    return FeatureMatrix(matrix, tuple(row_ids), FingerprintVocabulary.from_forms(forms, max_size))


def write_dense_csv(path, features, max_columns=5000):
    """
    Write a dense CSV with a leading ``id`` column.

    Raises:
        FormatError: More columns than ``max_columns``
    """
    if features.cols > max_columns:
        raise FormatError(
            f"Dense export of {features.cols} columns exceeds the limit of {max_columns}; use the sparse layout"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(features.to_dense(), columns=features.vocabulary.forms())
    frame.insert(0, 'id', list(features.row_ids))
    frame.to_csv(path, index=False)
    return path


def read_row_ids(path, rows):
    """``id`` column of an ids.csv when it exists and matches ``rows``; positions otherwise."""
    path = Path(path)
    if path.is_file():
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        if 'id' in frame.columns and len(frame) == rows:
            return list(frame['id'])
        logger.warning("Ignoring %s: expected an id column with %d rows", path, rows)
    return [str(i) for i in range(rows)]
