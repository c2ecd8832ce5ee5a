"""Per-modality feature matrices and their CSV exchange format.

CSV layout: header ``id,f0,f1,...`` with an optional trailing ``label``
column, one row per sample. Floats are written with 17 significant digits,
which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._atomic import atomic_write_text
from .errors import DataError


class FeatureFileError(DataError):
    pass


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """``data`` is (features x samples): one column per sample."""

    data: np.ndarray
    sample_ids: tuple[str, ...]
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise DataError(f"feature data must be 2D (features x samples), got shape {data.shape}")
        ids = tuple(str(s) for s in self.sample_ids)
        if len(ids) != data.shape[1]:
            raise DataError(f"{len(ids)} sample ids for {data.shape[1]} sample columns")
        if len(set(ids)) != len(ids):
            dup = next(s for s in ids if ids.count(s) > 1)
            raise DataError(f"duplicate sample id {dup!r}")
        if not np.all(np.isfinite(data)):
            raise DataError("feature matrix contains NaN or Inf")
        labels = self.labels
        if labels is not None:
            labels = np.array(labels, dtype=np.int64, copy=True)
            if labels.shape != (data.shape[1],):
                raise DataError(f"{labels.size} labels for {data.shape[1]} samples")
            labels.setflags(write=False)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "labels", labels)

    @property
    def n_features(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def select(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.intp)
        return FeatureMatrix(
            self.data[:, idx],
            tuple(self.sample_ids[i] for i in idx),
            None if self.labels is None else self.labels[idx],
        )

    def with_labels(self, labels) -> "FeatureMatrix":
        return FeatureMatrix(self.data, self.sample_ids, labels)


def check_aligned(a: FeatureMatrix, b: FeatureMatrix) -> None:
    if a.sample_ids != b.sample_ids:
        raise DataError("modalities do not list the same samples in the same order")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_feature_csv(fm: FeatureMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["id"] + [f"f{j}" for j in range(fm.n_features)]
    if fm.labels is not None:
        header.append("label")
    writer.writerow(header)
    for i, sid in enumerate(fm.sample_ids):
        row = [sid] + [_fmt(v) for v in fm.data[:, i]]
        if fm.labels is not None:
            row.append(str(int(fm.labels[i])))
        writer.writerow(row)
    return buf.getvalue()


def write_feature_matrix(fm: FeatureMatrix, path) -> None:
    atomic_write_text(path, format_feature_csv(fm))


def load_feature_matrix(path) -> FeatureMatrix:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FeatureFileError(f"cannot read feature file {path}: {exc}") from None

    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if not rows:
        raise FeatureFileError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "id":
        raise FeatureFileError(f"{path}: header must start with 'id'")
    has_label = header[-1] == "label"
    n_feat = len(header) - 1 - has_label

    ids, values, labels = [], [], []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise FeatureFileError(f"{path}: ragged row {lineno} has {len(row)} cells, expected {len(header)}")
        ids.append(row[0].strip())
        try:
            values.append([float(c) for c in row[1 : 1 + n_feat]])
            if has_label:
                labels.append(int(row[-1]))
        except ValueError:
            raise FeatureFileError(f"{path}: non-numeric cell in row {lineno}") from None

    data = np.array(values, dtype=np.float64).reshape(len(ids), n_feat).T
    try:
        return FeatureMatrix(data, ids, labels if has_label else None)
    except DataError as exc:
        raise FeatureFileError(f"{path}: {exc}") from None


def load_labels(path) -> dict[str, int]:
    """Read an ``id,label`` CSV into a mapping."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise FeatureFileError(f"cannot read labels file {path}: {exc}") from None
    if not rows or [h.strip() for h in rows[0][:2]] != ["id", "label"]:
        raise FeatureFileError(f"{path}: header must be 'id,label'")
    out = {}
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != 2:
            raise FeatureFileError(f"{path}: ragged row {lineno}")
        sid = row[0].strip()
        if sid in out:
            raise FeatureFileError(f"{path}: duplicate sample id {sid!r}")
        try:
            out[sid] = int(row[1])
        except ValueError:
            raise FeatureFileError(f"{path}: non-integer label in row {lineno}") from None
    return out


def write_labels(labels: dict[str, int], path) -> None:
    lines = ["id,label"] + [f"{k},{int(v)}" for k, v in labels.items()]
    atomic_write_text(path, "\n".join(lines) + "\n")
