import math

import numpy as np
import pytest

from polariton_rc.errors import DataError, DivergenceError, ParameterError
from polariton_rc.readout import (
    FeatureMatrix,
    ReadoutModel,
    _with_bias,
    accuracy,
    concat_ensemble,
    confusion,
    load_model,
    loss_and_grad,
    predict,
    save_model,
    scores,
    softmax,
    standardize_fit,
    train_logreg,
    training_loss,
)


def blobs(seed, n_per=30, dim=4, classes=10, spread=1.5):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0, 2, (classes, dim))
    y = np.repeat(np.arange(classes), n_per)
    X = centers[y] + rng.normal(0, spread, (len(y), dim))
    return FeatureMatrix(X, y)


def test_standardize_examples():
    m, s = standardize_fit(np.array([[0.0, 5.0], [2.0, 5.0]]))
    assert m.tolist() == [1.0, 5.0]
    assert s.tolist() == [1.0, 1.0]
    X = np.random.default_rng(0).normal(3, 2, (50, 3))
    m, s = standardize_fit(X)
    np.testing.assert_allclose(((X - m) / s).mean(axis=0), 0, atol=1e-14)
    with pytest.raises(ParameterError):
        standardize_fit(np.zeros((0, 3)))


def test_softmax_examples():
    np.testing.assert_allclose(softmax(np.zeros(10)), 0.1)
    z = np.random.default_rng(1).normal(size=10)
    np.testing.assert_allclose(softmax(z + 123.4), softmax(z), rtol=1e-12)
    big = softmax(np.array([1000.0] + [0.0] * 9))
    assert np.all(np.isfinite(big))
    assert big[0] == pytest.approx(1.0) and big.sum() == pytest.approx(1.0)


def test_zero_init_loss_is_ln10():
    fm = blobs(0)
    model = train_logreg(fm, max_iters=0)
    assert model.final_loss == pytest.approx(math.log(10), rel=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    Xb = _with_bias(rng.normal(size=(5, 3)))
    onehot = np.eye(10)[rng.integers(0, 10, 5)]
    W = rng.normal(scale=0.5, size=(4, 10))
    l2 = 0.3
    _, grad, _ = loss_and_grad(W, Xb, onehot, l2)
    h = 1e-6
    fd = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += h
        Wm[idx] -= h
        fd[idx] = (loss_and_grad(Wp, Xb, onehot, l2)[0] - loss_and_grad(Wm, Xb, onehot, l2)[0]) / (2 * h)
    assert np.max(np.abs(grad - fd)) / np.max(np.abs(fd)) <= 1e-5


@pytest.mark.parametrize("solver", ["lbfgs", "gd"])
def test_separable_two_class(solver):
    rng = np.random.default_rng(4)
    X = np.vstack([rng.uniform(1, 2, (20, 2)), rng.uniform(-2, -1, (20, 2))])
    y = np.array([3] * 20 + [7] * 20)
    fm = FeatureMatrix(X, y)
    model = train_logreg(fm, l2=0.0, max_iters=2000, solver=solver)
    assert accuracy(predict(model, X), y) == 1.0


def test_gd_and_lbfgs_reach_the_same_minimum():
    fm = blobs(1)
    slow = train_logreg(fm, l2=1e-2, lr=0.5, max_iters=20000, grad_tol=1e-8, solver="gd")
    fast = train_logreg(fm, l2=1e-2, grad_tol=1e-8)
    assert slow.grad_norm <= 1e-8
    assert slow.final_loss == pytest.approx(fast.final_loss, rel=1e-9)


def test_divergence_is_reported():
    fm = blobs(0)
    big = FeatureMatrix(fm.X * 1e6, fm.labels)
    with pytest.raises(DivergenceError):
        train_logreg(big, lr=1e200, standardize=False, max_iters=50, solver="gd")


def test_predict_accuracy_confusion():
    y = np.array([0, 1, 2, 2, 9])
    assert accuracy(y, y) == 1.0
    cm = confusion(y, y)
    assert np.array_equal(cm, np.diag(np.bincount(y, minlength=10)))
    cm = confusion(np.array([0, 0, 2, 1, 9]), y)
    assert cm.sum(axis=1).tolist() == np.bincount(y, minlength=10).tolist()


def test_uniform_weights_tie_break():
    model = ReadoutModel(np.ones((4, 10)), np.zeros(3), np.ones(3))
    X = np.random.default_rng(0).normal(size=(6, 3))
    assert predict(model, X).tolist() == [0] * 6


def test_argmax_invariant_under_positive_scaling():
    model = train_logreg(blobs(3), max_iters=200)
    s = scores(model, blobs(3).X)
    for c in (0.01, 1.0, 77.0):
        assert np.array_equal(np.argmax(c * s, axis=1), np.argmax(s, axis=1))


def test_predict_dimension_mismatch():
    model = ReadoutModel(np.zeros((4, 10)), np.zeros(3), np.ones(3))
    with pytest.raises(ParameterError):
        predict(model, np.zeros((2, 5)))


def test_concat_ensemble():
    fm = blobs(1, dim=64)
    assert np.array_equal(concat_ensemble([fm]).X, fm.X)
    six = concat_ensemble([fm] * 6)
    assert six.n_features == 384
    with pytest.raises(DataError):
        concat_ensemble([fm, FeatureMatrix(fm.X, np.roll(fm.labels, 1))])


def test_concat_order_does_not_change_accuracy():
    a, b = blobs(5, dim=3), blobs(6, dim=3)
    b = FeatureMatrix(b.X, a.labels)
    ab = train_logreg(concat_ensemble([a, b]), l2=0.0, max_iters=20000, grad_tol=1e-7)
    ba = train_logreg(concat_ensemble([b, a]), l2=0.0, max_iters=20000, grad_tol=1e-7)
    acc_ab = accuracy(predict(ab, np.hstack([a.X, b.X])), a.labels)
    acc_ba = accuracy(predict(ba, np.hstack([b.X, a.X])), a.labels)
    assert acc_ab == acc_ba


def test_loss_independent_of_column_permutation():
    fm = blobs(7, dim=5)
    perm = np.array([3, 0, 4, 1, 2])
    m1 = train_logreg(fm, l2=1e-2, max_iters=50000, grad_tol=1e-9)
    m2 = train_logreg(FeatureMatrix(fm.X[:, perm], fm.labels), l2=1e-2, max_iters=50000, grad_tol=1e-9)
    assert abs(m1.final_loss - m2.final_loss) <= 1e-6


@pytest.mark.parametrize("seed", [8, 9])
def test_regularization_monotone(seed):
    fm = blobs(seed, spread=3.0)
    losses = [
        training_loss(train_logreg(fm, l2=l2, max_iters=50000, grad_tol=1e-8), fm) for l2 in (0.0, 1e-3, 1e-1)
    ]
    assert losses[0] <= losses[1] + 1e-9 <= losses[2] + 2e-9


def test_model_roundtrip(tmp_path):
    fm = blobs(2)
    model = train_logreg(fm, max_iters=100)
    save_model(tmp_path / "m.txt", model)
    back = load_model(tmp_path / "m.txt")
    assert np.array_equal(back.weights, model.weights)
    assert np.array_equal(back.feature_means, model.feature_means)
    assert np.array_equal(predict(back, fm.X), predict(model, fm.X))
