"""CSV reports: training log, predictions and benchmark metrics."""

from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

from boosting.trainer import TrainLogEntry

FLOAT_FORMAT = "%.17g"
LOG_COLUMNS = ["block_index", "kind", "labeled_cross_entropy", "test_accuracy"]


def _write(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding="utf-8")
    return path


def training_log_frame(log: Sequence[TrainLogEntry]) -> pd.DataFrame:
    rows = [
        {
            "block_index": entry.block_index,
            "kind": entry.kind,
            "labeled_cross_entropy": entry.labeled_cross_entropy,
            "test_accuracy": entry.test_accuracy,
        }
        for entry in log
    ]
    return pd.DataFrame(rows, columns=LOG_COLUMNS)


def write_training_log(path, log: Sequence[TrainLogEntry]) -> Path:
    # test_accuracy is left blank when no test set was given
    return _write(training_log_frame(log), path)


def predictions_frame(scores, labels) -> pd.DataFrame:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    frame = pd.DataFrame({"row": np.arange(scores.shape[0], dtype=np.int64), "predicted": labels})
    for j in range(scores.shape[1]):
        frame[f"score_{j}"] = scores[:, j]
    return frame


def write_predictions(path, scores, labels) -> Path:
    return _write(predictions_frame(scores, labels), path)


def metrics_frame(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(rows)


def write_metrics(path, rows: List[Dict[str, Any]]) -> Path:
    return _write(metrics_frame(rows), path)
