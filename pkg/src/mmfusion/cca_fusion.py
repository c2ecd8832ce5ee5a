"""CCA-based feature-level fusion of two modalities.

Feature matrices are column-per-sample: ``X`` is (p, n), ``Y`` is (q, n).
Fitting works in the whitened form: with ``Rx = (Cxx + eps I)^(1/2)`` and
``Ry = (Cyy + eps I)^(1/2)``, the SVD ``U S V^T`` of ``Rx^-1 Cxy Ry^-1`` gives

    Wx = Rx^-1 U,   Wy = Ry^-1 V,   canonical correlations = diag(S).

These columns solve the generalized eigenproblems

    (Cxx+eps I)^-1 Cxy (Cyy+eps I)^-1 Cyx wx = s^2 wx
    (Cyy+eps I)^-1 Cyx (Cxx+eps I)^-1 Cxy wy = s^2 wy

without ever forming the non-symmetric products (see :func:`eigen_residuals`).
Fused features are the sum of both projections, ``Wx^T (X - mx) + Wy^T (Y - my)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .features import FeatureMatrix, check_aligned

SIGMA_TOL = 1e-9
SYMMETRY_TOL = 1e-10
DEFAULT_EPS_SCALE = 1e-4


class SingularCovarianceError(NumericalError):
    pass


@dataclass(frozen=True)
class CovarianceSet:
    cxx: np.ndarray
    cyy: np.ndarray
    cxy: np.ndarray
    mean_x: np.ndarray
    mean_y: np.ndarray
    n: int

    @property
    def cyx(self) -> np.ndarray:
        return self.cxy.T

    @property
    def p(self) -> int:
        return self.cxx.shape[0]

    @property
    def q(self) -> int:
        return self.cyy.shape[0]

    def regularized(self, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
        return self.cxx + epsilon * np.eye(self.p), self.cyy + epsilon * np.eye(self.q)


@dataclass(frozen=True, eq=False)
class CcaModel:
    wx: np.ndarray  # (p, d)
    wy: np.ndarray  # (q, d)
    correlations: np.ndarray  # (d,)
    mean_x: np.ndarray
    mean_y: np.ndarray
    epsilon: float

    @property
    def p(self) -> int:
        return self.wx.shape[0]

    @property
    def q(self) -> int:
        return self.wy.shape[0]

    @property
    def d(self) -> int:
        return self.wx.shape[1]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "d": self.d,
            "epsilon": float(self.epsilon),
            "correlations": self.correlations.tolist(),
            "mean_x": self.mean_x.tolist(),
            "mean_y": self.mean_y.tolist(),
            "Wx": self.wx.ravel().tolist(),
            "Wy": self.wy.ravel().tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "CcaModel":
        p, q, d = int(doc["p"]), int(doc["q"]), int(doc["d"])
        try:
            return cls(
                wx=np.array(doc["Wx"], dtype=np.float64).reshape(p, d),
                wy=np.array(doc["Wy"], dtype=np.float64).reshape(q, d),
                correlations=np.array(doc["correlations"], dtype=np.float64).reshape(d),
                mean_x=np.array(doc["mean_x"], dtype=np.float64).reshape(p),
                mean_y=np.array(doc["mean_y"], dtype=np.float64).reshape(q),
                epsilon=float(doc["epsilon"]),
            )
        except ValueError as exc:
            raise DataError(f"inconsistent CCA model document: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "CcaModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class FusedFeatures:
    data: np.ndarray  # (d, n)
    sample_ids: tuple[str, ...]
    labels: np.ndarray | None = None

    def as_feature_matrix(self) -> FeatureMatrix:
        return FeatureMatrix(self.data, self.sample_ids, self.labels)


def _data(m) -> np.ndarray:
    if isinstance(m, (FeatureMatrix, FusedFeatures)):
        return m.data
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise DataError(f"expected a (features x samples) matrix, got shape {a.shape}")
    return a


def _check_pair(X, Y) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(X, FeatureMatrix) and isinstance(Y, FeatureMatrix):
        check_aligned(X, Y)
    x, y = _data(X), _data(Y)
    if x.shape[1] != y.shape[1]:
        raise DataError(f"sample count mismatch: {x.shape[1]} vs {y.shape[1]}")
    return x, y


def compute_covariances(X, Y) -> CovarianceSet:
    """Within- and between-set covariances of centred data, denominator n-1."""
    x, y = _check_pair(X, Y)
    n = x.shape[1]
    if n < 2:
        raise DataError(f"need at least 2 samples to estimate covariance, got {n}")
    mx, my = x.mean(axis=1), y.mean(axis=1)
    xc, yc = x - mx[:, None], y - my[:, None]
    cxx = xc @ xc.T / (n - 1)
    cyy = yc @ yc.T / (n - 1)
    # exact symmetry; the products are symmetric only up to rounding
    cxx = (cxx + cxx.T) / 2
    cyy = (cyy + cyy.T) / 2
    return CovarianceSet(cxx, cyy, xc @ yc.T / (n - 1), mx, my, n)


def default_epsilon(cov: CovarianceSet) -> float:
    return DEFAULT_EPS_SCALE * float(np.trace(cov.cxx)) / cov.p


def _inv_sqrt(c: np.ndarray, epsilon: float, name: str) -> np.ndarray:
    scale = max(1.0, float(np.abs(c).max(initial=0.0)))
    if np.abs(c - c.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise DataError(f"{name} is not symmetric")
    evals, evecs = np.linalg.eigh(c + epsilon * np.eye(c.shape[0]))
    floor = evals.max(initial=0.0) * c.shape[0] * np.finfo(float).eps
    if evals.min(initial=1.0) <= floor:
        hint = "use epsilon > 0" if epsilon == 0 else "increase epsilon"
        raise SingularCovarianceError(f"{name} (+ eps I) is singular or indefinite; {hint}")
    return (evecs / np.sqrt(evals)) @ evecs.T


def fit_cca(cov: CovarianceSet, epsilon: float | None = None, d_max: int | None = None) -> CcaModel:
    """Solve for the canonical directions.

    ``epsilon=None`` picks ``1e-4 * trace(Cxx) / p``. Components with
    correlation <= 1e-9 are dropped; ``d_max`` caps the rest.
    """
    if epsilon is None:
        epsilon = default_epsilon(cov)
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if d_max is not None and d_max < 1:
        raise ValueError(f"d_max must be >= 1, got {d_max}")

    rx_inv = _inv_sqrt(cov.cxx, epsilon, "Cxx")
    ry_inv = _inv_sqrt(cov.cyy, epsilon, "Cyy")
    u, s, vt = np.linalg.svd(rx_inv @ cov.cxy @ ry_inv, full_matrices=False)

    d = int(np.count_nonzero(s > SIGMA_TOL))
    if d_max is not None:
        d = min(d, d_max)
    if d == 0:
        raise NumericalError("no canonical component has correlation above tolerance")

    wx = rx_inv @ u[:, :d]
    wy = ry_inv @ vt[:d].T
    # SVD signs are arbitrary; pin them so the largest |entry| of each wx column is positive
    pivot = np.argmax(np.abs(wx), axis=0)
    signs = np.where(wx[pivot, np.arange(d)] < 0, -1.0, 1.0)
    return CcaModel(wx * signs, wy * signs, s[:d].copy(), cov.mean_x.copy(), cov.mean_y.copy(), float(epsilon))


def fit(X, Y, epsilon: float | None = None, d_max: int | None = None) -> CcaModel:
    return fit_cca(compute_covariances(X, Y), epsilon, d_max)


def canonical_correlation(cov: CovarianceSet, wx, wy, epsilon: float = 0.0) -> float:
    """Correlation between the projections ``wx^T X`` and ``wy^T Y``.

    Variances are taken on the covariances regularized by ``epsilon``, so
    with the model's epsilon this reproduces the fitted correlations.
    """
    wx, wy = np.asarray(wx, dtype=np.float64), np.asarray(wy, dtype=np.float64)
    cxx, cyy = cov.regularized(epsilon)
    vx, vy = wx @ cxx @ wx, wy @ cyy @ wy
    if vx <= 0 or vy <= 0:
        raise NumericalError("direction has zero variance")
    return float(wx @ cov.cxy @ wy / np.sqrt(vx * vy))


def eigen_residuals(model: CcaModel, cov: CovarianceSet) -> tuple[np.ndarray, np.ndarray]:
    """Relative residuals of both eigen-equations, one entry per component.

    Builds the non-symmetric products explicitly; meant for verification,
    not for fitting.
    """
    cxx, cyy = cov.regularized(model.epsilon)
    mx = np.linalg.solve(cxx, cov.cxy) @ np.linalg.solve(cyy, cov.cyx)
    my = np.linalg.solve(cyy, cov.cyx) @ np.linalg.solve(cxx, cov.cxy)
    lam = model.correlations**2
    rx = np.linalg.norm(mx @ model.wx - model.wx * lam, axis=0) / np.linalg.norm(model.wx, axis=0)
    ry = np.linalg.norm(my @ model.wy - model.wy * lam, axis=0) / np.linalg.norm(model.wy, axis=0)
    return rx, ry


def transform_fuse(model: CcaModel, X, Y) -> FusedFeatures:
    """Project both modalities with the training means and sum them."""
    x, y = _check_pair(X, Y)
    if x.shape[0] != model.p or y.shape[0] != model.q:
        raise DataError(f"model expects ({model.p}, {model.q}) features, got ({x.shape[0]}, {y.shape[0]})")
    f = model.wx.T @ (x - model.mean_x[:, None]) + model.wy.T @ (y - model.mean_y[:, None])
    ids = X.sample_ids if isinstance(X, FeatureMatrix) else tuple(str(i) for i in range(x.shape[1]))
    labels = X.labels if isinstance(X, FeatureMatrix) else None
    return FusedFeatures(f, ids, labels)


def concat_features(X, Y):
    """Stack modalities vertically, ``X`` rows first."""
    x, y = _check_pair(X, Y)
    stacked = np.vstack([x, y])
    if isinstance(X, FeatureMatrix):
        return FeatureMatrix(stacked, X.sample_ids, X.labels)
    return stacked
