"""ADASYN oversampling of a minority class.

Synthetic points are allocated to minority samples in proportion to how many
of their k nearest neighbours belong to other classes, then generated on the
segment towards a random one of the sample's k nearest minority neighbours.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """``features`` is (d, n); ``synthetic[i]`` marks generated columns."""

    features: np.ndarray
    labels: np.ndarray
    synthetic: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.shape != (x.shape[1],):
            raise DataError(f"features {x.shape} and labels {y.shape} disagree")
        if y.size == 0:
            raise DataError("empty labeled set")
        syn = np.zeros(y.size, dtype=bool) if self.synthetic is None else np.asarray(self.synthetic, dtype=bool)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "synthetic", syn)


def _neighbors(x: np.ndarray, queries: np.ndarray, pool: np.ndarray, k: int) -> np.ndarray:
    """Indices into ``pool`` of the k nearest pool columns for each query column.

    Distances tie-break on pool order; a query never counts as its own neighbour.
    """
    diff = x[:, queries][:, :, None] - x[:, pool][:, None, :]
    dist = np.einsum("dij,dij->ij", diff, diff)
    dist[queries[:, None] == pool[None, :]] = np.inf
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``weights``, summing exactly to ``total``."""
    share = total * weights / weights.sum()
    counts = np.floor(share).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(share - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def adasyn(
    data: LabeledSet,
    minority_label: int,
    beta: float = 1.0,
    k_neighbors: int = 5,
    seed: int = 0,
    target_count: int | None = None,
) -> LabeledSet:
    """Append ``round((m_l - m_s) * beta)`` synthetic minority samples.

    ``m_l`` is the size of the largest other class unless ``target_count``
    overrides it. Inputs are never modified; new columns go at the end.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if k_neighbors < 1:
        raise ValueError(f"k_neighbors must be >= 1, got {k_neighbors}")

    x, y = data.features, data.labels
    minority = np.flatnonzero(y == minority_label)
    m_s = minority.size
    if m_s < 2:
        raise DataError(f"minority class {minority_label} has {m_s} samples; ADASYN needs at least 2")
    others = np.unique(y[y != minority_label])
    if target_count is None:
        target_count = max((int(np.count_nonzero(y == c)) for c in others), default=m_s)
    if target_count < m_s:
        warnings.warn(f"class {minority_label} is not the minority ({m_s} >= {target_count})", stacklevel=2)

    g_total = int(round(max(target_count - m_s, 0) * beta))
    if g_total == 0:
        return data

    everyone = np.arange(y.size)
    k_all = min(k_neighbors, y.size - 1)
    nn_all = _neighbors(x, minority, everyone, k_all)
    ratio = np.count_nonzero(y[nn_all] != minority_label, axis=1) / k_all
    if ratio.sum() == 0:
        ratio = np.ones(m_s)
    per_point = largest_remainder(g_total, ratio)

    k_min = min(k_neighbors, m_s - 1)
    nn_min = minority[_neighbors(x, minority, minority, k_min)]

    rng = np.random.default_rng(seed)
    parents = np.repeat(np.arange(m_s), per_point)
    partners = nn_min[parents, rng.integers(0, k_min, size=parents.size)]
    lam = rng.uniform(0.0, 1.0, size=parents.size)
    base = x[:, minority[parents]]
    new = base + lam * (x[:, partners] - base)

    return LabeledSet(
        np.hstack([x, new]),
        np.concatenate([y, np.full(parents.size, minority_label, dtype=np.int64)]),
        np.concatenate([data.synthetic, np.ones(parents.size, dtype=bool)]),
    )


def balance(data: LabeledSet, beta: float = 1.0, k_neighbors: int = 5, seed: int = 0) -> LabeledSet:
    """Oversample every class towards the size of the largest one.

    Each class is oversampled against the original data only, so synthetic
    points of one class never feed into another's neighbourhoods.
    """
    classes, counts = np.unique(data.labels, return_counts=True)
    largest = int(counts.max())
    parts_x, parts_y = [], []
    for offset, (c, m) in enumerate(zip(classes, counts)):
        if m == largest or m < 2:
            continue
        out = adasyn(data, int(c), beta, k_neighbors, seed + offset, target_count=largest)
        parts_x.append(out.features[:, data.labels.size :])
        parts_y.append(out.labels[data.labels.size :])
    if not parts_x:
        return data
    n_new = sum(p.size for p in parts_y)
    return LabeledSet(
        np.hstack([data.features, *parts_x]),
        np.concatenate([data.labels, *parts_y]),
        np.concatenate([data.synthetic, np.ones(n_new, dtype=bool)]),
    )
