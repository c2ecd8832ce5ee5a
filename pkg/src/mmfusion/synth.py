"""Deterministic synthetic datasets standing in for paired clinical scans.

Feature scenarios
-----------------
``features-complementary``
    Latents ``z1, z2`` are standard normal with correlation ``rho``. Modality
    A observes ``u_A z1`` and modality B observes ``u_B z2`` (``u`` random unit
    vectors) plus isotropic noise of std ``sigma``. The label depends on
    ``z1 + z2``, so each modality alone sees only part of the signal.
``features-redundant``
    Both modalities observe the same latent ``z``; the label depends on ``z``.

With two classes the label is ``z1 + z2 > 0`` (resp. ``z > 0``) and the Bayes
rates have closed forms (:func:`bayes_accuracy`). With three classes the
score is cut at quantiles matching 31/48/60 class sizes.

``volumes``
    Paired 3D volumes; positive subjects carry a spherical lesion centred on
    the annotated slice, darker than background in the first modality and
    brighter in the second.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._atomic import atomic_write_text
from .errors import ConfigError
from .features import FeatureMatrix, write_feature_matrix, write_labels
from .volume_io import Volume, save_volume

SCENARIOS = ("volumes", "features-complementary", "features-redundant")
THREE_CLASS_SHARES = (31, 48, 60)


@dataclass(frozen=True)
class GeneratorParams:
    rho: float = 0.5
    sigma: float = 0.5


DEFAULT_PARAMS = GeneratorParams()


def _three_class_cuts() -> tuple[float, float]:
    from statistics import NormalDist

    total = sum(THREE_CLASS_SHARES)
    nd = NormalDist()
    return (nd.inv_cdf(THREE_CLASS_SHARES[0] / total), nd.inv_cdf(sum(THREE_CLASS_SHARES[:2]) / total))


def _labels_from_score(score: np.ndarray, n_classes: int) -> np.ndarray:
    z = score / score.std() if n_classes > 2 else score
    if n_classes == 2:
        return (z > 0).astype(np.int64)
    lo, hi = _three_class_cuts()
    return np.digitize(z, [lo, hi]).astype(np.int64)


def _unit(rng, p):
    u = rng.normal(size=p)
    return u / np.linalg.norm(u)


def bayes_accuracy(scenario: str, params: GeneratorParams = DEFAULT_PARAMS) -> dict[str, float]:
    """Closed-form Bayes accuracy of each single modality and of both jointly (binary labels).

    The Bayes rule thresholds the conditional mean of the latent score, so
    for Gaussian latents the accuracy is ``1/2 + asin(r)/pi`` with ``r`` the
    (multiple) correlation between the observed statistics and the score.
    """
    rho, s2 = params.rho, params.sigma**2
    if scenario == "features-complementary":
        r_single = (1 + rho) / math.sqrt((1 + s2) * (2 + 2 * rho))
        r_joint = math.sqrt((1 + rho) / (1 + rho + s2))
    elif scenario == "features-redundant":
        r_single = 1 / math.sqrt(1 + s2)
        r_joint = 1 / math.sqrt(1 + s2 / 2)
    else:
        raise ConfigError(f"no Bayes rate for scenario {scenario!r}")
    acc = lambda r: 0.5 + math.asin(r) / math.pi  # noqa: E731
    return {"t1": acc(r_single), "t2": acc(r_single), "joint": acc(r_joint)}


def generate_features(
    scenario: str,
    n: int,
    p: int = 8,
    q: int | None = None,
    seed: int = 0,
    n_classes: int = 2,
    params: GeneratorParams = DEFAULT_PARAMS,
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Paired (p, n) and (q, n) feature matrices with labels attached."""
    if scenario not in ("features-complementary", "features-redundant"):
        raise ConfigError(f"not a feature scenario: {scenario!r}")
    if n < 4:
        raise ConfigError(f"need at least 4 subjects, got {n}")
    if n_classes not in (2, 3):
        raise ConfigError(f"n_classes must be 2 or 3, got {n_classes}")
    q = p if q is None else q
    rng = np.random.default_rng(seed)
    u_a, u_b = _unit(rng, p), _unit(rng, q)

    z1 = rng.normal(size=n)
    if scenario == "features-complementary":
        z2 = params.rho * z1 + math.sqrt(1 - params.rho**2) * rng.normal(size=n)
        score = z1 + z2
    else:
        z2 = z1
        score = z1
    a = np.outer(u_a, z1) + params.sigma * rng.normal(size=(p, n))
    b = np.outer(u_b, z2) + params.sigma * rng.normal(size=(q, n))
    labels = _labels_from_score(score, n_classes)
    ids = tuple(f"s{i:04d}" for i in range(n))
    return FeatureMatrix(a, ids, labels), FeatureMatrix(b, ids, labels)


def _ball(shape, center, radius):
    zz, yy, xx = np.ogrid[: shape[0], : shape[1], : shape[2]]
    cz, cy, cx = center
    return (zz - cz) ** 2 + (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2


def generate_volumes(n: int, dims=(32, 32, 12), seed: int = 0, n_classes: int = 2):
    """Yield ``(sample_id, t1_volume, t2_volume, t1_slice, t2_slice, label)``.

    Labels cycle through the classes in a seeded order so every class is
    present once ``n >= n_classes``. Higher classes get larger lesions.
    """
    if n < 4:
        raise ConfigError(f"need at least 4 subjects, got {n}")
    x, y, nz = dims
    if min(dims) < 1:
        raise ConfigError(f"volume dims must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % n_classes)
    shape = (nz, y, x)
    for i in range(n):
        label = int(labels[i])
        t1 = rng.normal(100.0, 5.0, size=shape)
        t2 = rng.normal(60.0, 5.0, size=shape)
        lo, hi = min(2, nz - 1), max(min(2, nz - 1), nz - 3)
        cz = int(rng.integers(lo, hi + 1))
        if label > 0:
            radius = max(1.0, min(x, y) / 8) * (1 + 0.5 * (label - 1))
            cy = int(rng.integers(y // 4, max(y // 4 + 1, 3 * y // 4)))
            cx = int(rng.integers(x // 4, max(x // 4 + 1, 3 * x // 4)))
            mask = _ball(shape, (cz, cy, cx), radius)
            t1[mask] -= 50.0
            t2[mask] += 80.0
        yield f"s{i:04d}", Volume(t1, (0.8, 0.8, 3.0)), Volume(t2, (0.6, 0.6, 3.0)), cz, cz, label


def write_annotations(rows, path) -> None:
    lines = ["id,t1_slice,t2_slice"] + [f"{sid},{u},{v}" for sid, u, v in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")


def synth(out, scenario: str, n: int, dims=None, seed: int = 0, n_classes: int = 2) -> list[Path]:
    """Write a dataset under ``out``; returns the paths written."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    out = Path(out)
    written = []
    if scenario == "volumes":
        dims = tuple(dims) if dims else (32, 32, 12)
        if len(dims) != 3:
            raise ConfigError("volume dims need three values: X Y N")
        ann, labels = [], {}
        for sid, v1, v2, u, v, label in generate_volumes(n, dims, seed, n_classes):
            for tag, vol in (("t1", v1), ("t2", v2)):
                path = out / "volumes" / f"{sid}_{tag}.mhd"
                save_volume(vol, path)
                written.append(path)
            ann.append((sid, u, v))
            labels[sid] = label
        write_annotations(ann, out / "annotations.csv")
        write_labels(labels, out / "labels.csv")
        return written + [out / "annotations.csv", out / "labels.csv"]

    p = int(dims[0]) if dims else 8
    q = int(dims[1]) if dims and len(dims) > 1 else p
    a, b = generate_features(scenario, n, p, q, seed, n_classes)
    write_feature_matrix(a, out / "t1_features.csv")
    write_feature_matrix(b, out / "t2_features.csv")
    write_labels(dict(zip(a.sample_ids, a.labels.tolist())), out / "labels.csv")
    meta = {"scenario": scenario, "n": n, "p": p, "q": q, "seed": seed, "n_classes": n_classes}
    if n_classes == 2:
        meta["bayes_accuracy"] = bayes_accuracy(scenario)
    atomic_write_text(out / "generator.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return [out / "t1_features.csv", out / "t2_features.csv", out / "labels.csv", out / "generator.json"]
