"""Stratified cross-validation of the four pipeline variants and report output.

Variants:

* ``t1`` / ``t2``: one modality's features -> optional ADASYN -> linear SVM
* ``concat``: both modalities stacked -> optional ADASYN -> linear SVM
* ``fusion``: CCA fitted on the training pairs -> fused features -> linear SVM
  (ADASYN off unless ``fusion_adasyn`` is set)

Everything is fitted on the training indices of a fold only.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import cca_fusion, classifier
from .errors import DataError, MMFusionError
from .features import FeatureMatrix
from .sampling import LabeledSet, balance

VARIANTS = ("t1", "t2", "concat", "fusion")
VARIANT_TITLES = {
    "t1": "T1-weighted",
    "t2": "T2-weighted",
    "concat": "Concat. of T1 & T2",
    "fusion": "Feature Fusion (CCA)",
}


@dataclass
class ExperimentConfig:
    folds: int = 10
    seed: int = 0
    svm_c: float = 1.0
    svm_tol: float = 1e-3
    svm_max_iter: int = 100_000
    cca_epsilon: float | None = None
    cca_dmax: int | None = None
    adasyn: bool = True
    adasyn_beta: float = 1.0
    adasyn_k: int = 5
    fusion_adasyn: bool = False


@dataclass(frozen=True, eq=False)
class FoldPlan:
    folds: tuple[np.ndarray, ...]
    seed: int
    labels: np.ndarray

    @property
    def k(self) -> int:
        return len(self.folds)

    def split(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.folds[i]
        train = np.concatenate([f for j, f in enumerate(self.folds) if j != i])
        return np.sort(train), test


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class, then deal samples round-robin into ``k`` folds.

    The dealing position carries over from one class to the next, so fold
    sizes differ by at most one overall as well as per class.
    """
    labels = np.asarray(labels)
    n = labels.size
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if k > n:
        raise DataError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    buckets = [[] for _ in range(k)]
    pos = 0
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        for idx in members:
            buckets[pos % k].append(int(idx))
            pos += 1
    folds = tuple(np.array(sorted(b), dtype=np.intp) for b in buckets)
    return FoldPlan(folds, seed, labels.copy())


def binary_metrics(tp: int, fn: int, tn: int, fp: int) -> tuple[float, float, float]:
    """(accuracy, sensitivity, specificity). An undefined rate comes back as NaN."""
    if min(tp, fn, tn, fp) < 0:
        raise ValueError("confusion counts must be non-negative")
    total = tp + fn + tn + fp
    if total == 0:
        raise ValueError("empty confusion matrix")
    if tp + fn == 0:
        warnings.warn("no positive samples: sensitivity undefined", stacklevel=2)
        sens = math.nan
    else:
        sens = tp / (tp + fn)
    if tn + fp == 0:
        warnings.warn("no negative samples: specificity undefined", stacklevel=2)
        spec = math.nan
    else:
        spec = tn / (tn + fp)
    return (tp + tn) / total, sens, spec


def sem(values) -> tuple[float, float]:
    """Mean and standard error of the mean (ddof=1)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError(f"SEM needs at least 2 values, got {v.size}")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _as_array(m) -> np.ndarray:
    return m.data if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class FittedVariant:
    variant: str
    svm: classifier.SvmModel
    cca: cca_fusion.CcaModel | None = None

    def features(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        if self.variant == "t1":
            return x1
        if self.variant == "t2":
            return x2
        if self.variant == "concat":
            return cca_fusion.concat_features(x1, x2)
        return cca_fusion.transform_fuse(self.cca, x1, x2).data

    def predict(self, x1, x2) -> np.ndarray:
        return classifier.predict(self.svm, self.features(_as_array(x1), _as_array(x2)))[0]


def fit_variant(variant: str, x1, x2, y, config: ExperimentConfig, seed: int = 0) -> FittedVariant:
    """Fit one pipeline variant on training data only."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    x1, x2, y = _as_array(x1), _as_array(x2), np.asarray(y)
    cca = None
    if variant == "fusion":
        cca = cca_fusion.fit(x1, x2, config.cca_epsilon, config.cca_dmax)
    fitted = FittedVariant(variant, None, cca)  # type: ignore[arg-type]
    feats = fitted.features(x1, x2)

    use_adasyn = config.fusion_adasyn if variant == "fusion" else config.adasyn
    if use_adasyn:
        feats, y = _oversample(feats, y, config, seed)
    svm = classifier.fit(feats, y, config.svm_c, config.svm_tol, config.svm_max_iter, seed)
    return FittedVariant(variant, svm, cca)


def _oversample(feats, y, config, seed):
    _, counts = np.unique(y, return_counts=True)
    if counts.min() < 2 or counts.min() == counts.max():
        return feats, y
    out = balance(LabeledSet(feats, y), config.adasyn_beta, config.adasyn_k, seed)
    return out.features, out.labels


def confusion(y_true, y_pred, classes) -> np.ndarray:
    """Rows = true class, columns = predicted class."""
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[index[int(t)], index[int(p)]] += 1
    return cm


def run_variant(variant: str, x1, x2, labels, plan: FoldPlan, config: ExperimentConfig) -> list[np.ndarray]:
    """Per-fold confusion matrices (classes in sorted label order)."""
    x1, x2, labels = _as_array(x1), _as_array(x2), np.asarray(labels)
    classes = [int(c) for c in np.unique(labels)]
    out = []
    for i in range(plan.k):
        train, test = plan.split(i)
        try:
            fitted = fit_variant(variant, x1[:, train], x2[:, train], labels[train], config, config.seed + i)
        except MMFusionError as exc:
            raise type(exc)(f"variant {variant!r}, fold {i}: {exc}") from exc
        pred = fitted.predict(x1[:, test], x2[:, test])
        out.append(confusion(labels[test], pred, classes))
    return out


def _summary(values) -> dict:
    v = [x for x in values if not math.isnan(x)]
    if len(v) < len(values):
        warnings.warn(f"{len(values) - len(v)} undefined fold value(s) excluded from SEM", stacklevel=3)
    if len(v) < 2:
        return {"mean": float(v[0]) if v else None, "sem": None, "n": len(v)}
    mean, err = sem(v)
    return {"mean": mean, "sem": err, "n": len(v)}


def _nan_to_none(x: float):
    return None if math.isnan(x) else x


def summarize_binary(cms: list[np.ndarray]) -> dict:
    # class order is sorted, so the positive class is the last row/column
    per_fold = []
    for cm in cms:
        tn, fp, fn, tp = (int(v) for v in cm.ravel())
        per_fold.append((tp, fn, tn, fp))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rates = [binary_metrics(*c) for c in per_fold]
        pooled = binary_metrics(*np.sum(per_fold, axis=0).tolist())
    names = ("accuracy", "sensitivity", "specificity")
    return {
        "folds": [
            {"tp": c[0], "fn": c[1], "tn": c[2], "fp": c[3], **{k: _nan_to_none(r[j]) for j, k in enumerate(names)}}
            for c, r in zip(per_fold, rates)
        ],
        "summary": {k: _summary([r[j] for r in rates]) for j, k in enumerate(names)},
        "pooled": {k: _nan_to_none(pooled[j]) for j, k in enumerate(names)},
    }


def summarize_multiclass(cms: list[np.ndarray]) -> dict:
    acc = [float(np.trace(cm) / cm.sum()) for cm in cms]
    total = np.sum(cms, axis=0)
    return {
        "folds": [{"confusion": cm.tolist(), "accuracy": a} for cm, a in zip(cms, acc)],
        "summary": {"accuracy": _summary(acc)},
        "pooled": {"accuracy": float(np.trace(total) / total.sum())},
    }


@dataclass
class EvalReport:
    config: dict
    binary: dict = field(default_factory=dict)
    multiclass: dict = field(default_factory=dict)
    classes: list = field(default_factory=list)
    n_samples: int = 0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "classes": self.classes,
            "n_samples": self.n_samples,
            "binary": self.binary,
            "multiclass": self.multiclass,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_text(self) -> str:
        return format_report(self)


def evaluate(x1, x2, labels, config: ExperimentConfig | None = None, variants=VARIANTS) -> EvalReport:
    """Cross-validate ``variants`` and collect a report.

    With more than two classes, class 0 is the negative class: a binary task
    (0 vs rest) runs first, then the multiclass task.
    """
    config = config or ExperimentConfig()
    x1, x2, labels = _as_array(x1), _as_array(x2), np.asarray(labels, dtype=np.int64)
    if x1.shape[1] != labels.size or x2.shape[1] != labels.size:
        raise DataError("feature matrices and labels disagree on the number of samples")
    classes = [int(c) for c in np.unique(labels)]
    if len(classes) < 2:
        raise DataError("need at least two classes to evaluate")

    report = EvalReport(config=asdict(config), classes=classes, n_samples=int(labels.size))
    report.notes = [
        "linear-kernel SVM with C=%g (kernel and C not fixed by the method; assumed)" % config.svm_c,
        "CCA epsilon: %s" % ("1e-4 * trace(Cxx) / p per fold" if config.cca_epsilon is None else config.cca_epsilon),
        "ADASYN on baselines: %s (beta=%g, k=%d); on fusion: %s"
        % (config.adasyn, config.adasyn_beta, config.adasyn_k, config.fusion_adasyn),
    ]

    if len(classes) == 2:
        binary_labels = labels
    else:
        binary_labels = (labels != classes[0]).astype(np.int64)
    plan = stratified_kfold(binary_labels, config.folds, config.seed)
    for v in variants:
        report.binary[v] = summarize_binary(run_variant(v, x1, x2, binary_labels, plan, config))

    if len(classes) > 2:
        plan = stratified_kfold(labels, config.folds, config.seed)
        for v in variants:
            report.multiclass[v] = summarize_multiclass(run_variant(v, x1, x2, labels, plan, config))
    return report


def _cell(stat: dict) -> str:
    if stat["mean"] is None:
        return "n/a"
    if stat["sem"] is None:
        return f"{100 * stat['mean']:.2f} (n/a)"
    return f"{100 * stat['mean']:.2f} ({100 * stat['sem']:.2f})"


def format_report(report: EvalReport) -> str:
    k = report.config.get("folds")
    lines = [f"# {report.n_samples} samples, classes {report.classes}, {k}-fold stratified CV, seed {report.config.get('seed')}"]
    lines += [f"# {note}" for note in report.notes]
    width = max([len(t) for t in VARIANT_TITLES.values()] + [7]) + 2

    if report.binary:
        lines += ["", "Binary classification (positive = IPMN / non-zero class)"]
        cols = ("Accuracy (SEM %)", "Sensitivity (SEM %)", "Specificity (SEM %)")
        lines.append("Methods".ljust(width) + "".join(c.ljust(22) for c in cols).rstrip())
        for v, res in report.binary.items():
            s = res["summary"]
            cells = [_cell(s[m]) for m in ("accuracy", "sensitivity", "specificity")]
            lines.append(VARIANT_TITLES[v].ljust(width) + "".join(c.ljust(22) for c in cells).rstrip())

    if report.multiclass:
        lines += ["", f"{len(report.classes)}-class classification (classes {report.classes})"]
        lines.append("Methods".ljust(width) + "Accuracy % (SEM %)")
        for v, res in report.multiclass.items():
            lines.append(VARIANT_TITLES[v].ljust(width) + _cell(res["summary"]["accuracy"]))
    return "\n".join(lines) + "\n"
