"""Intensity projections, resizing, and per-image feature vectors."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .features import FeatureMatrix, load_feature_matrix, write_feature_matrix  # noqa: F401
from .volume_io import Volume

N_BINS = 32
DESCRIPTOR_DIM = 2 * N_BINS


@dataclass(frozen=True, eq=False)
class Image2D:
    """``pixels`` has shape ``(H, W)``, row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim != 2 or min(px.shape) < 1:
            raise DataError(f"image must be a non-empty 2D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise DataError("image contains non-finite pixels")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def dims(self) -> tuple[int, int]:
        """(W, H)."""
        h, w = self.pixels.shape
        return w, h


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    modality: str = "first"
    sample_id: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise DataError("feature vector contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _check_stack(sub: Volume) -> np.ndarray:
    if sub.n_slices < 1:
        raise DataError("cannot project an empty sub-volume")
    return sub.data


def min_projection(sub: Volume) -> Image2D:
    """Per-pixel minimum across slices (used for the hypo-intense modality)."""
    return Image2D(_check_stack(sub).min(axis=0))


def max_projection(sub: Volume) -> Image2D:
    """Per-pixel maximum across slices (used for the hyper-intense modality)."""
    return Image2D(_check_stack(sub).max(axis=0))


PROJECTIONS = {"min": min_projection, "max": max_projection}


def _sample_coords(n_in: int, n_out: int):
    # corner-aligned: output 0 -> input 0, output n_out-1 -> input n_in-1
    if n_out == 1 or n_in == 1:
        pos = np.zeros(n_out)
    else:
        pos = np.arange(n_out) * (n_in - 1) / (n_out - 1)
    i0 = np.minimum(np.floor(pos).astype(np.intp), n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, pos - i0


def resize_image(img: Image2D, w: int, h: int) -> Image2D:
    """Bilinear resize with corner-aligned sampling."""
    if w < 1 or h < 1:
        raise ValueError(f"target size must be >= 1, got {w}x{h}")
    src = img.pixels
    in_h, in_w = src.shape
    if (in_w, in_h) == (w, h):
        return img

    y0, y1, ty = _sample_coords(in_h, h)
    x0, x1, tx = _sample_coords(in_w, w)
    ty = ty[:, None]
    top = src[y0][:, x0] * (1 - tx) + src[y0][:, x1] * tx
    bottom = src[y1][:, x0] * (1 - tx) + src[y1][:, x1] * tx
    out = top * (1 - ty) + bottom * ty
    # convex combinations can overshoot by an ulp
    return Image2D(np.clip(out, src.min(), src.max()))


def normalize_l2(v):
    """Scale to unit Euclidean norm. Accepts a FeatureVector or an array."""
    values = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
    peak = np.abs(values).max(initial=0.0)
    if peak == 0:
        raise DataError("cannot l2-normalize a zero vector")
    # pre-scale so the squared norm neither underflows nor overflows
    out = values / peak
    out = out / np.linalg.norm(out)
    return replace(v, values=out) if isinstance(v, FeatureVector) else out


def _histogram(values: np.ndarray, hi: float) -> np.ndarray:
    """Fraction of ``values`` (all within [lo, hi] after shifting to 0) per bin."""
    if hi > 0:
        idx = np.minimum(np.floor(values / hi * N_BINS).astype(np.intp), N_BINS - 1)
    else:
        idx = np.zeros(values.shape, dtype=np.intp)
    return np.bincount(idx.ravel(), minlength=N_BINS) / values.size


def gradient_magnitude(px: np.ndarray) -> np.ndarray:
    grads = [np.gradient(px, axis=a) if px.shape[a] > 1 else np.zeros_like(px) for a in (0, 1)]
    return np.hypot(*grads)


def toy_descriptor(img: Image2D, modality: str = "first", sample_id: str = "") -> FeatureVector:
    """Deterministic 64-d stand-in for a learned image embedding.

    32-bin histogram of min-max normalised intensities followed by a 32-bin
    histogram of gradient magnitude over ``[0, max]``, then l2-normalised. A
    constant image puts all intensity mass in bin 0 and all gradient mass in
    bin 0.
    """
    px = img.pixels
    lo = px.min()
    grad = gradient_magnitude(px)
    vec = np.concatenate([_histogram(px - lo, px.max() - lo), _histogram(grad, grad.max())])
    return normalize_l2(FeatureVector(vec, modality, sample_id))
