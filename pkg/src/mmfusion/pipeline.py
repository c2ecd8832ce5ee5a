"""File-level pipeline stages: volumes -> projections -> feature CSVs -> report."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from ._atomic import atomic_write_text
from .config import PipelineConfig
from .errors import DataError
from .evaluation import EvalReport, evaluate
from .features import FeatureMatrix, load_feature_matrix, load_labels, write_feature_matrix
from .projection import PROJECTIONS, resize_image, toy_descriptor
from .volume_io import SliceSelection, load_volume, slice_window, write_metaimage

logger = logging.getLogger(__name__)


def load_annotations(path) -> dict[str, tuple[int, int]]:
    """``id,t1_slice,t2_slice`` -> {id: (u, v)}."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read annotations {path}: {exc}") from None
    if not rows or [h.strip() for h in rows[0]] != ["id", "t1_slice", "t2_slice"]:
        raise DataError(f"{path}: header must be 'id,t1_slice,t2_slice'")
    out = {}
    for lineno, row in enumerate(rows[1:], 2):
        try:
            out[row[0].strip()] = (int(row[1]), int(row[2]))
        except (IndexError, ValueError):
            raise DataError(f"{path}: bad annotation row {lineno}") from None
    return out


def project(cfg: PipelineConfig) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Project every annotated subject and write images and feature CSVs under ``cfg.out``."""
    annotations = load_annotations(cfg.annotations)
    labels = load_labels(cfg.labels) if cfg.labels else None
    vol_dir, out = Path(cfg.volumes), Path(cfg.out)

    ids = sorted(annotations)
    cols = {"t1": [], "t2": []}
    for sid in ids:
        for tag, center, kind in (
            ("t1", annotations[sid][0], cfg.t1_projection),
            ("t2", annotations[sid][1], cfg.t2_projection),
        ):
            vol = load_volume(vol_dir / f"{sid}_{tag}.mhd")
            sub = slice_window(vol, SliceSelection(center, cfg.half_window))
            img = resize_image(PROJECTIONS[kind](sub), cfg.image_size, cfg.image_size)
            write_metaimage(out / "projections" / f"{sid}_{tag}.mhd", img.pixels, vol.spacing[:2])
            cols[tag].append(toy_descriptor(img, tag, sid).values)

    if labels is not None:
        missing = [s for s in ids if s not in labels]
        if missing:
            raise DataError(f"no label for subject(s) {missing[:5]}")
        lab = [labels[s] for s in ids]
    else:
        lab = None
    mats = tuple(FeatureMatrix(np.array(cols[t]).T, ids, lab) for t in ("t1", "t2"))
    write_feature_matrix(mats[0], out / "t1_features.csv")
    write_feature_matrix(mats[1], out / "t2_features.csv")
    return mats


def _resolve_labels(t1: FeatureMatrix, t2: FeatureMatrix, labels_path) -> tuple[FeatureMatrix, np.ndarray]:
    if t1.sample_ids != t2.sample_ids:
        # align the second modality to the first by id
        pos = {s: i for i, s in enumerate(t2.sample_ids)}
        if set(pos) != set(t1.sample_ids):
            raise DataError("the two feature files list different sample ids")
        t2 = t2.select([pos[s] for s in t1.sample_ids])
    if labels_path:
        mapping = load_labels(labels_path)
        try:
            return t2, np.array([mapping[s] for s in t1.sample_ids])
        except KeyError as exc:
            raise DataError(f"no label for sample {exc.args[0]!r}") from None
    for fm in (t1, t2):
        if fm.labels is not None:
            return t2, fm.labels
    raise DataError("no labels: pass a labels file or include a label column")


def run(cfg: PipelineConfig) -> EvalReport:
    """Evaluate the configured variants and write ``report.txt`` and ``report.json``."""
    if cfg.input_mode == "volumes":
        t1, t2 = project(cfg)
    else:
        t1, t2 = load_feature_matrix(cfg.t1_features), load_feature_matrix(cfg.t2_features)
    t2, labels = _resolve_labels(t1, t2, cfg.labels)
    report = evaluate(t1.data, t2.data, labels, cfg.experiment(), cfg.variants())
    out = Path(cfg.out)
    atomic_write_text(out / "report.json", report.to_json())
    atomic_write_text(out / "report.txt", report.to_text())
    return report
