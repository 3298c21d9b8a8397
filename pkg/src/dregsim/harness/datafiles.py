# Feature file ingestion: svmlight-style sparse text and dense CSV.

from __future__ import annotations

import numpy as np

from ..spectra import Dataset


class FeatureFileError(ValueError):
    """Malformed feature file; carries the 1-based offending line number."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


def _map_labels(labels: np.ndarray, path: str) -> np.ndarray:
    """Map raw labels onto -1/+1 for classification-as-regression.

    Two distinct values map larger to +1 and smaller to -1; a single value
    maps by sign.  More than two distinct labels is rejected.
    """
    distinct = np.unique(labels)
    if distinct.size > 2:
        raise ValueError(f"{path}: expected binary labels, found {distinct.size} distinct values")
    if distinct.size == 2:
        return np.where(labels == distinct[1], 1.0, -1.0)
    return np.where(labels > 0, 1.0, -1.0)


def _load_svmlight(path: str) -> tuple[np.ndarray, np.ndarray]:
    rows: list[dict[int, float]] = []
    labels: list[float] = []
    max_index = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise FeatureFileError(path, line_no, f"bad label {tokens[0]!r}") from None
            entries: dict[int, float] = {}
            for tok in tokens[1:]:
                idx_text, sep, val_text = tok.partition(":")
                if not sep:
                    raise FeatureFileError(path, line_no, f"expected index:value, got {tok!r}")
                try:
                    idx = int(idx_text)
                    val = float(val_text)
                except ValueError:
                    raise FeatureFileError(path, line_no, f"bad index:value pair {tok!r}") from None
                if idx < 1:
                    raise FeatureFileError(path, line_no, f"indices are 1-based, got {idx}")
                entries[idx] = val
                max_index = max(max_index, idx)
            labels.append(label)
            rows.append(entries)
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    x = np.zeros((len(rows), max_index))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            x[i, idx - 1] = val
    return x, np.array(labels)


def _load_dense_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    labels: list[float] = []
    rows: list[list[float]] = []
    width: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if len(cells) < 2:
                raise FeatureFileError(path, line_no, "need a label plus at least one feature")
            try:
                values = [float(c) for c in cells]
            except ValueError:
                raise FeatureFileError(path, line_no, f"non-numeric cell in {line!r}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise FeatureFileError(path, line_no,
                                       f"expected {width} columns, found {len(values)}")
            labels.append(values[0])
            rows.append(values[1:])
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    return np.array(rows), np.array(labels)


def load_feature_file(path: str, fmt: str = "svmlight") -> Dataset:
    """Load a labeled feature file as a regression Dataset.

    svmlight format: one sample per line, ``label index:value ...`` with
    1-based indices; the dimension is the largest index seen.  dense_csv:
    label in the first column, features in the rest.  Labels are mapped to
    -1/+1.
    """
    if fmt == "svmlight":
        x, labels = _load_svmlight(path)
    elif fmt == "dense_csv":
        x, labels = _load_dense_csv(path)
    else:
        raise ValueError(f"unknown feature file format {fmt!r}")
    y = _map_labels(labels, path)
    return Dataset(x, y, source=f"file({path})")


def max_abs_scaler(train: Dataset) -> np.ndarray:
    """Per-feature max-abs divisors from the training covariates (1 where a
    column is identically zero)."""
    scale = np.max(np.abs(train.covariates), axis=0)
    scale[scale == 0] = 1.0
    return scale


def apply_scaler(data: Dataset, scale: np.ndarray) -> Dataset:
    return Dataset(data.covariates / scale, data.responses,
                   source=f"{data.source}[scaled]")
