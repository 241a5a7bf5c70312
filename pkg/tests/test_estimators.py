"""Scikit-learn API conformance of the estimator wrappers."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from depthsign.autoencoder import SparseAutoencoder
from depthsign.classifier import SoftmaxClassifier
from depthsign.data import split_dataset, synth_gestures
from depthsign.linalg import make_rng
from depthsign.stack import StackedAutoencoderClassifier


@pytest.fixture(scope="module")
def xy():
    ds = synth_gestures(3, 30, 8, 0.05, make_rng(8))
    sp = split_dataset(ds, (0.7, 0.3, 0.0), make_rng(9))
    X, y = ds.columns().T, np.array(["fist", "palm", "point"])[ds.labels]
    return X[sp.train], y[sp.train], X[sp.validation], y[sp.validation]


def test_get_set_params_and_clone():
    est = StackedAutoencoderClassifier(hidden_layer_sizes=(8, 4), ae_epochs=(3, 2))
    params = est.get_params()
    assert params["hidden_layer_sizes"] == (8, 4) and params["random_state"] == 0
    other = clone(est).set_params(softmax_epochs=7)
    assert other.softmax_epochs == 7 and est.softmax_epochs == 400


def test_unfitted_raises(xy):
    with pytest.raises(NotFittedError):
        SparseAutoencoder().transform(xy[0])
    with pytest.raises(NotFittedError):
        StackedAutoencoderClassifier().predict(xy[0])


def test_sparse_autoencoder_transformer(xy):
    X = xy[0]
    ae = SparseAutoencoder(hidden=6, epochs_max=20, random_state=1).fit(X, X_val=xy[2])
    codes = ae.transform(X)
    assert codes.shape == (X.shape[0], 6) and np.all((codes > 0) & (codes < 1))
    assert ae.inverse_transform(codes).shape == X.shape
    assert ae.score(X) < 0
    assert ae.n_features_in_ == 64


def test_pipeline_of_autoencoder_and_softmax(xy):
    X, y, Xv, yv = xy
    pipe = make_pipeline(SparseAutoencoder(hidden=10, epochs_max=40, random_state=1),
                         SoftmaxClassifier(epochs_max=100, learning_rate=1.0, random_state=1))
    pipe.fit(X, y)
    assert pipe.score(Xv, yv) > 0.9
    assert set(pipe.predict(Xv)) <= set(y)


def test_stacked_classifier(xy):
    X, y, Xv, yv = xy
    clf = StackedAutoencoderClassifier(hidden_layer_sizes=(12, 6), ae_epochs=(60, 40),
                                       softmax_epochs=150, learning_rate=1.0,
                                       sparsity_target=0.1, random_state=2)
    clf.fit(X, y, X_val=Xv, y_val=yv)
    proba = clf.predict_proba(Xv)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)
    assert list(clf.classes_) == ["fist", "palm", "point"]
    assert clf.network_.layer_dims == [64, 12, 6, 3]
    assert clf.transform(Xv).shape == (Xv.shape[0], 6)
    assert clf.score(Xv, yv) > 0.9


def test_stacked_classifier_deterministic(xy):
    X, y = xy[0], xy[1]
    kw = dict(hidden_layer_sizes=(6, 4), ae_epochs=(3, 2), softmax_epochs=3, random_state=5)
    a = StackedAutoencoderClassifier(**kw).fit(X, y).predict_proba(X)
    b = StackedAutoencoderClassifier(**kw).fit(X, y).predict_proba(X)
    assert a.tobytes() == b.tobytes()


def test_input_validation(xy):
    with pytest.raises(ValueError):
        SoftmaxClassifier(epochs_max=1).fit(xy[0], xy[1][:-1])
    clf = SoftmaxClassifier(epochs_max=1).fit(xy[0], xy[1])
    with pytest.raises(ValueError):
        clf.predict(xy[0][:, :10])
