import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmfusion.errors import DataError
from mmfusion.projection import (
    DESCRIPTOR_DIM,
    N_BINS,
    FeatureVector,
    Image2D,
    max_projection,
    min_projection,
    normalize_l2,
    resize_image,
    toy_descriptor,
)
from mmfusion.volume_io import Volume
from oracles import bilinear_formula, projection_loop

finite = st.floats(-1e6, 1e6, allow_nan=False)
stacks = arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5)), elements=finite)


@pytest.mark.parametrize("proj", [min_projection, max_projection])
def test_constant_volume(proj):
    img = proj(Volume(np.full((3, 4, 5), 7.0)))
    assert img.dims == (5, 4)
    assert np.all(img.pixels == 7.0)


def test_single_column():
    vol = Volume(np.array([3.0, 1.0, 2.0]).reshape(3, 1, 1))
    assert min_projection(vol).pixels[0, 0] == 1.0
    assert max_projection(vol).pixels[0, 0] == 3.0


@pytest.mark.parametrize("seed", range(5))
def test_matches_loop_oracle(seed):
    stack = np.random.default_rng(seed).normal(size=(5, 4, 4))
    vol = Volume(stack)
    assert np.array_equal(min_projection(vol).pixels, projection_loop(stack, "min"))
    assert np.array_equal(max_projection(vol).pixels, projection_loop(stack, "max"))


@given(stacks)
def test_projection_bounds(stack):
    vol = Volume(stack)
    lo, hi = min_projection(vol).pixels, max_projection(vol).pixels
    assert np.all(lo[None] <= stack) and np.all(stack <= hi[None])


@given(stacks)
def test_projection_idempotent_under_duplication(stack):
    doubled = Volume(np.repeat(stack, 2, axis=0))
    vol = Volume(stack)
    assert np.array_equal(min_projection(doubled).pixels, min_projection(vol).pixels)
    assert np.array_equal(max_projection(doubled).pixels, max_projection(vol).pixels)


def test_resize_identity():
    px = np.random.default_rng(0).normal(size=(5, 7))
    assert np.array_equal(resize_image(Image2D(px), 7, 5).pixels, px)


@pytest.mark.parametrize("size", [(1, 1), (3, 9), (224, 224)])
def test_resize_constant(size):
    out = resize_image(Image2D(np.full((4, 6), 2.5)), *size)
    assert out.dims == size
    assert np.all(out.pixels == 2.5)


def test_resize_checkerboard_matches_bilinear_formula():
    src = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = resize_image(Image2D(src), 4, 4).pixels
    expected = bilinear_formula(src, 4, 4)
    np.testing.assert_allclose(out, expected, atol=1e-15)
    # corners are exact, centre row is symmetric
    assert out[0, 0] == 0 and out[0, 3] == 1 and out[3, 0] == 1 and out[3, 3] == 0
    np.testing.assert_allclose(out[1], [1 / 3, 4 / 9, 5 / 9, 2 / 3])


@pytest.mark.parametrize("seed", range(3))
def test_resize_random_matches_formula(seed):
    rng = np.random.default_rng(seed)
    src = rng.normal(size=(rng.integers(1, 6), rng.integers(1, 6)))
    w, h = rng.integers(1, 12, size=2)
    np.testing.assert_allclose(resize_image(Image2D(src), w, h).pixels, bilinear_formula(src, w, h), atol=1e-12)


@settings(deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite), st.integers(1, 15), st.integers(1, 15))
def test_resize_preserves_range(px, w, h):
    out = resize_image(Image2D(px), w, h).pixels
    assert out.shape == (h, w)
    assert out.min() >= px.min() and out.max() <= px.max()


def test_resize_rejects_bad_size():
    with pytest.raises(ValueError):
        resize_image(Image2D(np.zeros((2, 2))), 0, 3)


def test_image_rejects_empty():
    with pytest.raises(DataError):
        Image2D(np.zeros((0, 3)))


@pytest.mark.parametrize(
    "values, expected",
    [([3, 4], [0.6, 0.8]), ([1, 1, 1, 1], [0.5, 0.5, 0.5, 0.5])],
)
def test_normalize_l2(values, expected):
    out = normalize_l2(FeatureVector(values, "first", "a"))
    np.testing.assert_allclose(out.values, expected, rtol=0, atol=1e-15)
    assert out.sample_id == "a" and out.modality == "first"


def test_normalize_zero_vector():
    with pytest.raises(DataError):
        normalize_l2(FeatureVector([0.0, 0.0]))


@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(-1e3, 1e3)))
def test_normalize_unit_norm(v):
    if not np.any(v):
        return
    assert abs(np.linalg.norm(normalize_l2(v)) - 1) <= 1e-9


def hist_loop(px):
    lo, hi = px.min(), px.max()
    counts = [0] * N_BINS
    for v in px.ravel():
        b = int((v - lo) / (hi - lo) * N_BINS) if hi > lo else 0
        counts[min(b, N_BINS - 1)] += 1
    return np.array(counts, dtype=float)


def test_descriptor_constant_image():
    d = toy_descriptor(Image2D(np.full((8, 8), 3.0))).values
    assert d.shape == (DESCRIPTOR_DIM,)
    intensity, grad = d[:N_BINS], d[N_BINS:]
    assert np.count_nonzero(intensity) == 1 and intensity[0] > 0
    assert np.count_nonzero(grad) == 1 and grad[0] > 0


def test_descriptor_deterministic_and_normalised():
    img = Image2D(np.random.default_rng(3).normal(size=(16, 16)))
    a, b = toy_descriptor(img), toy_descriptor(img)
    assert a.values.tobytes() == b.values.tobytes()
    assert abs(np.linalg.norm(a.values) - 1) <= 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_descriptor_negation_mirrors_intensity_histogram(seed):
    px = np.random.default_rng(seed).normal(size=(12, 10))
    d = toy_descriptor(Image2D(px)).values
    neg = toy_descriptor(Image2D(-px)).values
    # intensity half agrees with a hand-rolled histogram, up to the common scale
    h = hist_loop(px)
    scale = d[:N_BINS].sum() / h.sum()
    np.testing.assert_allclose(d[:N_BINS], h * scale, atol=1e-12)
    np.testing.assert_allclose(neg[:N_BINS], d[:N_BINS][::-1], atol=1e-12)
    np.testing.assert_allclose(neg[N_BINS:], d[N_BINS:], atol=1e-12)
