import numpy as np
import pytest

from mmfusion.classifier import (
    SvmModel,
    decision_function,
    fit,
    predict,
    primal_objective,
    train_binary,
    train_multiclass,
)
from mmfusion.errors import DataError
from oracles import svm_dual_grid

SEPARABLE_X = np.array([[2.0, 3.0, -2.0, -3.0], [0.0, 1.0, 0.0, -1.0]])
SEPARABLE_Y = np.array([1, 1, -1, -1])


def blobs(seed, k=3, n_per=30, spread=0.3):
    rng = np.random.default_rng(seed)
    centres = 4.0 * np.stack([np.cos(2 * np.pi * np.arange(k) / k), np.sin(2 * np.pi * np.arange(k) / k)])
    x = np.hstack([centres[:, [c]] + spread * rng.normal(size=(2, n_per)) for c in range(k)])
    return x, np.repeat(np.arange(k), n_per)


def test_separable_training_accuracy():
    model = train_binary(SEPARABLE_X, SEPARABLE_Y, C=1.0)
    labels, _ = predict(model, SEPARABLE_X)
    np.testing.assert_array_equal(labels, SEPARABLE_Y)


def test_degenerate_labels():
    with pytest.raises(DataError, match="degenerate labels"):
        train_binary(SEPARABLE_X, np.ones(4))


def test_bad_inputs():
    with pytest.raises(DataError):
        train_binary(np.array([[np.nan, 1, 2, 3]]), SEPARABLE_Y)
    with pytest.raises(ValueError):
        train_binary(SEPARABLE_X, SEPARABLE_Y, C=0.0)
    with pytest.raises(DataError):
        train_binary(SEPARABLE_X, np.array([1, 2, -1, -1]))


@pytest.mark.parametrize(
    "X, C",
    [
        (np.array([[1.0, -0.2, 0.0, 0.6], [0.5, 0.3, 0.0, -0.4]]), 1.0),
        (np.array([[0.3, -0.5, 0.1, 0.4], [0.2, 0.6, -0.3, 0.1]]), 0.5),
        (np.array([[1.3, 0.4, -0.7, 0.2], [-0.1, 0.9, 0.25, -0.6]]), 2.0),
    ],
)
def test_objective_matches_dual_enumeration(X, C):
    y = np.array([1, 1, -1, -1])
    model = train_binary(X, y, C=C, tol=1e-9)
    primal = primal_objective(model.weights[0], model.biases[0], X, y, C)
    dual_best = svm_dual_grid(X, y, C, steps=400)
    assert abs(primal - dual_best) <= 1e-4


def test_duality_gap_recorded():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 80))
    y = np.where(x[0] + 0.5 * rng.normal(size=80) > 0, 1, -1)
    model = train_binary(x, y, C=1.0, tol=1e-6)
    assert 0 <= model.duality_gaps[0] < 1e-3
    assert model.iterations[0] > 0


def test_dual_objective_monotone():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4, 120))
    y = np.where(x[0] - x[1] + rng.normal(size=120) > 0, 1, -1)
    hist = train_binary(x, y, C=1.0, tol=1e-6).objective_history[0]
    assert hist.size > 10
    assert np.all(np.diff(hist) <= 1e-12)


def test_deterministic():
    x, y = blobs(0, k=2)
    y = np.where(y == 1, 1, -1)
    a, b = train_binary(x, y, seed=3), train_binary(x, y, seed=3)
    assert a.weights.tobytes() == b.weights.tobytes() and a.biases.tobytes() == b.biases.tobytes()


@pytest.mark.parametrize("seed", range(3))
def test_margins_on_separable_data_with_large_c(seed):
    x, y = blobs(seed, k=2, spread=0.5)
    y = np.where(y == 1, 1, -1)
    model = train_binary(x, y, C=1e3, tol=1e-8)
    margins = y * decision_function(model, x)[0]
    assert np.all(margins >= 1 - 1e-6)
    # support vectors sit on the margin
    assert np.isclose(margins.min(), 1.0, atol=1e-6)


@pytest.mark.parametrize("c", [0.1, 10.0])
def test_scale_consistency(c):
    x, y = blobs(4, k=2, spread=0.6)
    y = np.where(y == 1, 1, -1)
    C = 10.0
    base = predict(train_binary(x, y, C=C, tol=1e-8), x)[0]
    scaled = predict(train_binary(c * x, y, C=C / c**2, tol=1e-8), c * x)[0]
    np.testing.assert_array_equal(base, scaled)


def test_multiclass_separable_blobs():
    x, y = blobs(5)
    # construction margin: blob centres are 4*sqrt(3) apart, spread 0.3 -> far more than 6 sigma
    assert np.min(np.linalg.norm(x[:, y == 0].mean(1) - x[:, y == 1].mean(1))) > 6
    model = train_multiclass(x, y, C=1.0)
    assert model.weights.shape == (3, 2)
    np.testing.assert_array_equal(predict(model, x)[0], y)


def test_multiclass_missing_class():
    x, y = blobs(0)
    y = np.where(y == 1, 2, y)  # labels {0, 2}
    with pytest.raises(DataError):
        train_multiclass(x, y, n_classes=3)
    with pytest.raises(DataError):
        train_multiclass(x, y)


def test_multiclass_binary_reduction():
    x, y = blobs(6, k=2)
    multi = train_multiclass(x, y, tol=1e-6)
    binary = train_binary(x, np.where(y == 1, 1, -1), tol=1e-6)
    np.testing.assert_array_equal(predict(multi, x)[0], np.where(predict(binary, x)[0] == 1, 1, 0))


def test_multiclass_tie_goes_to_lowest_index():
    model = SvmModel((0, 1, 2), np.zeros((3, 2)), np.array([1.0, 1.0, 0.0]), 1.0)
    assert predict(model, np.zeros((2, 1)))[0].tolist() == [0]


def test_predict_sign_rule_and_tie():
    model = SvmModel((-1, 1), np.array([[1.0, 0.0]]), np.array([0.5]), 1.0)
    labels, scores = predict(model, np.array([[2.0, -0.5, -1.0], [7.0, 3.0, 0.0]]))
    assert labels.tolist() == [1, 1, -1]
    assert scores.tolist() == [2.5, 0.0, -0.5]


def test_batch_equals_single():
    x, y = blobs(7)
    model = train_multiclass(x, y)
    batch = predict(model, x)[0]
    single = [predict(model, x[:, i])[0][0] for i in range(x.shape[1])]
    assert batch.tolist() == single


def test_predict_dimension_mismatch():
    model = train_binary(SEPARABLE_X, SEPARABLE_Y)
    with pytest.raises(DataError):
        predict(model, np.zeros((3, 2)))


def test_fit_dispatch_keeps_original_labels():
    x, y = blobs(8, k=2)
    model = fit(x, np.where(y == 1, 7, 3))
    assert model.classes == (3, 7) and model.is_binary
    assert set(predict(model, x)[0].tolist()) == {3, 7}
    x3, y3 = blobs(8, k=3)
    model = fit(x3, y3 + 10)
    assert model.classes == (10, 11, 12) and not model.is_binary


def test_json_round_trip():
    x, y = blobs(9)
    model = train_multiclass(x, y)
    doc = model.to_dict()
    assert set(doc) == {"classes", "C", "models"}
    assert set(doc["models"][0]) == {"class", "w", "b"}
    back = SvmModel.from_json(model.to_json())
    assert back.weights.tobytes() == model.weights.tobytes()
    assert predict(back, x)[0].tolist() == predict(model, x)[0].tolist()
    binary = train_binary(SEPARABLE_X, SEPARABLE_Y)
    assert SvmModel.from_json(binary.to_json()).is_binary
