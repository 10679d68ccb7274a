import numpy as np
import numpy.testing as npt
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from eegerr.errors import DataError
from eegerr.estimator import SequenceClassifier, TrialFeaturizer
from eegerr.io import Trial


def shifted_dataset(rng, n=60, steps=5, dim=13, shift=2.0):
    X = rng.standard_normal((n, steps, dim))
    y = rng.integers(2, size=n)
    X[y == 1, :, 0] += shift
    return X, y


def test_fit_predict_roundtrip():
    rng = np.random.default_rng(0)
    X, y = shifted_dataset(rng)
    clf = SequenceClassifier(epochs=8, learning_rate=5e-3, hidden_dim=6, seed=1)
    assert clf.fit(X, y) is clf
    preds = clf.predict(X)
    assert preds.shape == (len(y),)
    assert (preds == y).mean() >= 0.9
    probs = clf.predict_proba(X)
    npt.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert clf.score(X, y) >= 0.9


def test_estimator_deterministic_given_seed():
    rng = np.random.default_rng(1)
    X, y = shifted_dataset(rng, n=30)
    p1 = SequenceClassifier(epochs=2, seed=7).fit(X, y).predict_proba(X)
    p2 = SequenceClassifier(epochs=2, seed=7).fit(X, y).predict_proba(X)
    npt.assert_array_equal(p1, p2)


def test_estimator_get_params_and_clone():
    clf = SequenceClassifier(architecture="gru", hidden_dim=9, seed=3)
    params = clf.get_params()
    assert params["architecture"] == "gru"
    assert params["hidden_dim"] == 9
    cloned = clone(clf)
    assert cloned.get_params() == params


def test_estimator_not_fitted_error():
    with pytest.raises(NotFittedError):
        SequenceClassifier().predict(np.zeros((2, 3, 13)))


def test_estimator_input_validation():
    clf = SequenceClassifier(epochs=1)
    with pytest.raises(DataError):
        clf.fit(np.zeros((4, 3, 13)), np.array([0, 1, 2, 0]))  # bad labels
    with pytest.raises(DataError):
        clf.fit(np.zeros((4, 3, 13)), np.array([0, 1]))  # label count
    with pytest.raises(DataError):
        clf.fit(np.full((4, 3, 13), np.nan), np.array([0, 1, 0, 1]))


def test_estimator_normalization_is_fitted_on_train_only():
    rng = np.random.default_rng(2)
    X, y = shifted_dataset(rng, n=40)
    clf = SequenceClassifier(epochs=1, seed=0, normalize=True).fit(X, y)
    means_before = clf.normalizer_.means.copy()
    # predicting on wildly offset data must not change the fitted scaler
    clf.predict(X + 100.0)
    npt.assert_array_equal(clf.normalizer_.means, means_before)


def test_estimator_without_normalization():
    rng = np.random.default_rng(3)
    X, y = shifted_dataset(rng, n=30)
    clf = SequenceClassifier(epochs=1, seed=0, normalize=False).fit(X, y)
    assert clf.normalizer_ is None
    clf.predict(X)


def test_trial_featurizer_transform():
    rng = np.random.default_rng(4)
    fs = 500.0
    trials = [
        Trial("s", i, float(i), "OK", rng.standard_normal((3, int(fs))) * 20.0)
        for i in range(4)
    ]
    tf = TrialFeaturizer(sample_rate_hz=fs)
    out = tf.fit_transform(trials)
    assert out.shape == (4, 3, 13)
    assert np.all(np.isfinite(out))
    params = tf.get_params()
    assert params["sample_rate_hz"] == fs


def test_estimator_rejects_negative_seed():
    with pytest.raises(DataError, match="seed"):
        SequenceClassifier(seed=-1, epochs=1).fit(
            np.zeros((4, 3, 13)), np.array([0, 1, 0, 1])
        )
