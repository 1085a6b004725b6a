"""
Feature CSV ingest and export.

Schema: one header row naming feature columns f0..f{d-1} in order, optionally
followed by a final "label" column of non-negative integer class indices.
"""

import re
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from utils.errors import (
    FeatureParseError,
    LabelRangeError,
    NonFiniteValueError,
)
from utils.telemetry import get_logger
from .bundle import FeatureMatrix, OneHotLabels, as_feature_matrix, class_indices, one_hot

logger = get_logger(__name__)

LABEL_COLUMN = "label"
_LINE_PATTERN = re.compile(r"line (\d+)")


def feature_columns(dims: int):
    return [f"f{i}" for i in range(dims)]


def _read_raw(path: Path) -> pd.DataFrame:
    # header=None: the header row fixes the width, so wider data rows fail instead of becoming an index
    try:
        table = pd.read_csv(
            path, header=None, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise FeatureParseError("file is empty (header row required)", path=str(path), line=1)
    except pd.errors.ParserError as e:
        match = _LINE_PATTERN.search(str(e))
        line = int(match.group(1)) if match else None
        raise FeatureParseError(f"column-count mismatch: {e}", path=str(path), line=line)
    except UnicodeDecodeError as e:
        raise FeatureParseError(f"not valid UTF-8 text: {e.reason}", path=str(path))

    raw = table.iloc[1:].reset_index(drop=True)
    raw.columns = [str(name) for name in table.iloc[0].tolist()]
    return raw


def _check_header(columns, has_labels: bool, path: Path) -> int:
    names = [str(c).strip() for c in columns]
    if has_labels:
        if not names or names[-1] != LABEL_COLUMN:
            raise FeatureParseError(f"last column must be '{LABEL_COLUMN}', got {names[-1:]}", path=str(path), line=1)
        names = names[:-1]
    elif names and names[-1] == LABEL_COLUMN:
        names = names[:-1]
    if not names:
        raise FeatureParseError("no feature columns in header", path=str(path), line=1)
    if names != feature_columns(len(names)):
        raise FeatureParseError(f"feature columns must be f0..f{len(names) - 1} in order", path=str(path), line=1)
    return len(names)


def _to_float(raw: pd.DataFrame, path: Path) -> pd.DataFrame:
    short_rows = np.flatnonzero(raw.isna().any(axis=1).to_numpy())
    if short_rows.size:
        # +2: one header line, 1-based numbering
        raise FeatureParseError(
            f"column-count mismatch, expected {raw.shape[1]} fields",
            path=str(path), line=int(short_rows[0]) + 2,
        )
    try:
        return raw.astype(np.float64)
    except ValueError:
        coerced = raw.apply(lambda col: pd.to_numeric(col, errors="coerce"))
        tokens = raw.apply(lambda col: col.str.strip().str.lower())
        unparsable = coerced.isna().to_numpy() & ~tokens.isin(("nan", "-nan", "+nan")).to_numpy()
        row, col = np.argwhere(unparsable)[0]
        raise FeatureParseError(
            f"cannot parse {raw.iat[row, col]!r} in column {raw.columns[col]}",
            path=str(path), line=int(row) + 2,
        )


def load_features(
    path,
    has_labels: bool,
    num_classes: Optional[int] = None,
) -> Tuple[FeatureMatrix, Optional[OneHotLabels]]:
    """
    Load a feature CSV.

    Args:
        path: CSV file following the feature schema
        has_labels: Whether the final "label" column must be present and parsed
        num_classes: Explicit J; otherwise J = max label index + 1

    Returns:
        (N×d feature matrix, N×J one-hot labels or None)
    """
    path = Path(path)
    raw = _read_raw(path)
    dims = _check_header(raw.columns, has_labels, path)
    numeric = _to_float(raw, path)

    values = numeric.iloc[:, :dims].to_numpy(dtype=np.float64)
    finite = np.isfinite(values)
    if not finite.all():
        row = int(np.argwhere(~finite)[0, 0])
        raise NonFiniteValueError(f"{path}: row {row} (line {row + 2}) holds a non-finite value")
    features = as_feature_matrix(values.reshape(-1, dims))

    if not has_labels:
        return features, None

    label_values = numeric[LABEL_COLUMN].to_numpy(dtype=np.float64)
    bad = ~np.isfinite(label_values) | (label_values < 0) | (label_values != np.floor(label_values))
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise LabelRangeError(f"{path}: line {row + 2} label must be a non-negative integer")
    indices = label_values.astype(np.int64)

    if num_classes is None:
        num_classes = int(indices.max()) + 1 if indices.size else 2
        if num_classes < 2:
            raise LabelRangeError(f"{path}: labels span a single class; pass an explicit class count")
    elif indices.size and indices.max() >= num_classes:
        row = int(np.argmax(indices >= num_classes))
        raise LabelRangeError(f"{path}: line {row + 2} label {indices[row]} >= class count {num_classes}")

    logger.info(f"features_loaded: {path} rows={features.shape[0]} dims={dims}")
    return features, one_hot(indices, num_classes)


def save_features(path, features: FeatureMatrix, labels: Optional[OneHotLabels] = None):
    """Write features (and optional labels as class indices) with 17 significant digits."""
    features = np.asarray(features, dtype=np.float64)
    frame = pd.DataFrame(features, columns=feature_columns(features.shape[1]))
    if labels is not None:
        frame[LABEL_COLUMN] = class_indices(np.asarray(labels)).astype(np.int64)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g", encoding="utf-8")
