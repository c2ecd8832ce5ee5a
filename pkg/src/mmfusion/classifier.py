"""Linear soft-margin SVM: binary and one-vs-rest multiclass.

Training solves the dual

    min_a  1/2 a^T Q a - sum(a)   s.t.  0 <= a_i <= C,  y^T a = 0,
    Q_ij = y_i y_j <x_i, x_j>

by SMO with second-order working-set selection, so the bias is not
regularized and the primal objective is exactly
``1/2 |w|^2 + C sum max(0, 1 - y (w.x + b))``. The solver stops when the
maximal KKT violation drops to ``tol``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DataError

logger = logging.getLogger(__name__)

TAU = 1e-12


@dataclass(frozen=True, eq=False)
class SvmModel:
    """One row of ``weights``/``biases`` per decision function.

    Binary models hold a single function scoring ``classes[1]`` (positive)
    against ``classes[0]``; one-vs-rest models hold one per class.
    """

    classes: tuple[int, ...]
    weights: np.ndarray
    biases: np.ndarray
    C: float
    iterations: tuple[int, ...] = ()
    duality_gaps: tuple[float, ...] = ()
    objective_history: tuple[np.ndarray, ...] = field(default=(), repr=False)

    @property
    def is_binary(self) -> bool:
        return self.weights.shape[0] == 1

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def to_dict(self) -> dict:
        if self.is_binary:
            per_class = [{"class": self.classes[1], "w": self.weights[0].tolist(), "b": float(self.biases[0])}]
        else:
            per_class = [
                {"class": c, "w": w.tolist(), "b": float(b)} for c, w, b in zip(self.classes, self.weights, self.biases)
            ]
        return {"classes": list(self.classes), "C": self.C, "models": per_class}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "SvmModel":
        models = doc["models"]
        return cls(
            classes=tuple(int(c) for c in doc["classes"]),
            weights=np.array([m["w"] for m in models], dtype=np.float64),
            biases=np.array([m["b"] for m in models], dtype=np.float64),
            C=float(doc["C"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        return cls.from_dict(json.loads(text))


@njit(cache=True)
def _smo_kernel(K, y, C, tol, max_iter, alpha, grad, history):
    n = y.size
    it = 0
    history[0] = 0.0
    while it < max_iter:
        i = -1
        m_val = -np.inf
        low_min = np.inf
        for t in range(n):
            s = -y[t] * grad[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if s > m_val:
                    m_val = s
                    i = t
            if (y[t] < 0 and alpha[t] < C) or (y[t] > 0 and alpha[t] > 0):
                if s < low_min:
                    low_min = s
        if i < 0 or m_val - low_min <= tol:
            break

        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] < 0 and alpha[t] < C) or (y[t] > 0 and alpha[t] > 0):
                b = m_val + y[t] * grad[t]
                if b > 0:
                    a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                    if a < TAU:
                        a = TAU
                    v = -(b * b) / a
                    if v < best:
                        best = v
                        j = t
        b = m_val + y[j] * grad[j]
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a < TAU:
            a = TAU
        step = b / a
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(step, lim_i, lim_j)
        di = y[i] * step
        dj = -y[j] * step
        alpha[i] += di
        alpha[j] += dj
        # snap to bounds so set membership stays exact
        for k in (i, j):
            if alpha[k] < 1e-15 * C:
                alpha[k] = 0.0
            elif alpha[k] > C * (1 - 1e-15):
                alpha[k] = C
        ci = y[i] * di
        cj = y[j] * dj
        obj = 0.0
        for t in range(n):
            grad[t] += y[t] * (K[t, i] * ci + K[t, j] * cj)
            obj += alpha[t] * (grad[t] - 1.0)
        it += 1
        history[it] = 0.5 * obj
    return it


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)
    history = np.empty(max_iter + 1)
    it = _smo_kernel(np.ascontiguousarray(K), y, float(C), float(tol), int(max_iter), alpha, grad, history)
    if it >= max_iter:
        logger.warning("SMO hit max_iter=%d before reaching tol=%g", max_iter, tol)
    return alpha, grad, it, history[: it + 1].copy()


def _bias(alpha, grad, y, C) -> float:
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yg[free].mean()
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        lb_mask = ~ub_mask
        ub = yg[ub_mask].min(initial=np.inf)
        lb = yg[lb_mask].max(initial=-np.inf)
        rho = (ub + lb) / 2 if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
    return -float(rho)


def primal_objective(w, b, X, y, C) -> float:
    margins = y * (w @ X + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[1],):
        raise DataError(f"X must be (d, n) with n labels; got X{X.shape}, y{y.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite features")
    return X, y


def _train_pm(X, y, C, tol, max_iter, seed):
    """Binary solve on labels in {-1, +1}; returns (w, b, iterations, gap, history)."""
    perm = np.random.default_rng(seed).permutation(y.size)
    Xp, yp = X[:, perm], y[perm].astype(np.float64)
    K = Xp.T @ Xp
    alpha, grad, it, history = _smo(K, yp, C, tol, max_iter)
    w = Xp @ (alpha * yp)
    b = _bias(alpha, grad, yp, C)
    dual = alpha.sum() - 0.5 * float(w @ w)
    gap = primal_objective(w, b, Xp, yp, C) - dual
    return w, b, it, gap, history


def train_binary(X, y, C: float = 1.0, tol: float = 1e-3, max_iter: int = 100_000, seed: int = 0) -> SvmModel:
    """Train on ``X`` (d, n) with labels in {-1, +1}."""
    X, y = _check_xy(X, y)
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if not np.all((y == 1) | (y == -1)):
        raise DataError("binary labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise DataError("degenerate labels: both classes must be present")
    w, b, it, gap, hist = _train_pm(X, y, C, tol, max_iter, seed)
    return SvmModel((-1, 1), w[None, :], np.array([b]), float(C), (it,), (gap,), (hist,))


def train_multiclass(
    X, y, C: float = 1.0, tol: float = 1e-3, max_iter: int = 100_000, seed: int = 0, n_classes: int | None = None
) -> SvmModel:
    """One-vs-rest over labels ``0..K-1``; every class must be present."""
    X, y = _check_xy(X, y)
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    K = int(y.max()) + 1 if n_classes is None else n_classes
    present = set(np.unique(y).tolist())
    missing = sorted(set(range(K)) - present)
    if missing or not present <= set(range(K)):
        raise DataError(f"labels must cover 0..{K - 1} exactly; missing classes {missing}")
    if K < 2:
        raise DataError("degenerate labels: need at least 2 classes")

    ws, bs, its, gaps, hists = [], [], [], [], []
    for k in range(K):
        w, b, it, gap, hist = _train_pm(X, np.where(y == k, 1, -1), C, tol, max_iter, seed + k)
        ws.append(w)
        bs.append(b)
        its.append(it)
        gaps.append(gap)
        hists.append(hist)
    return SvmModel(tuple(range(K)), np.array(ws), np.array(bs), float(C), tuple(its), tuple(gaps), tuple(hists))


def fit(X, labels, C: float = 1.0, tol: float = 1e-3, max_iter: int = 100_000, seed: int = 0) -> SvmModel:
    """Dispatch on the label set: two classes give a binary model scoring the larger label."""
    X, labels = _check_xy(X, labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise DataError("degenerate labels: need at least 2 classes")
    if classes.size == 2:
        model = train_binary(X, np.where(labels == classes[1], 1, -1), C, tol, max_iter, seed)
        return SvmModel(
            (int(classes[0]), int(classes[1])),
            model.weights,
            model.biases,
            model.C,
            model.iterations,
            model.duality_gaps,
            model.objective_history,
        )
    remap = np.searchsorted(classes, labels)
    model = train_multiclass(X, remap, C, tol, max_iter, seed)
    return SvmModel(
        tuple(int(c) for c in classes),
        model.weights,
        model.biases,
        model.C,
        model.iterations,
        model.duality_gaps,
        model.objective_history,
    )


def decision_function(model: SvmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, got {X.shape[0]}")
    return model.weights @ X + model.biases[:, None]


def predict(model: SvmModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels and scores for the columns of ``X``.

    Binary: score >= 0 maps to the positive class (a zero score counts as
    positive). Multiclass: argmax of per-class scores, ties to the lowest
    class index. Scores are (m,) for binary and (K, m) for multiclass.
    """
    scores = decision_function(model, X)
    classes = np.asarray(model.classes)
    if model.is_binary:
        s = scores[0]
        return np.where(s >= 0, classes[1], classes[0]), s
    return classes[np.argmax(scores, axis=0)], scores
