import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import MinMaxScaler

from ncws.evaluation import prf1
from ncws.losses import Assembly, BaseLoss, RiskSpec, empirical_risk, loss_derivative
from ncws.model import (LinearModel, PULinearClassifier, TrainConfig, TrainingError, fit_sgd,
                        load_model, predict_labels, predict_scores, save_model, train)


def separable(rng, n=200):
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    X = y[:, None] * np.array([1.0, 1.0]) + 0.2 * rng.normal(size=(n, 2))
    return X, y


def test_separable_naive_hinge_reaches_f1_one(rng):
    X, y = separable(rng)
    model = train(X, y, RiskSpec(Assembly.NAIVE, "hinge"), TrainConfig(epochs=10))
    assert prf1(predict_labels(model.decision_function(X)), y).f1 == 1.0


def test_all_positive_scores_positive_and_risk_vanishes(rng):
    X = rng.normal(size=(50, 2))
    y = np.ones(50, dtype=int)
    spec = RiskSpec(Assembly.NAIVE, "hinge")
    model = train(X, y, spec, TrainConfig(learning_rate=0.1, epochs=30))
    scores = model.decision_function(X)
    assert np.all(scores > 0)
    assert empirical_risk(spec, scores, y).value < 1e-6


def test_training_is_bit_identical(rng):
    X, y = separable(rng)
    spec = RiskSpec(Assembly.NCWS)
    neg = rng.uniform(0.1, 0.9, size=len(y))
    a = train(X, y, spec, TrainConfig(seed=5, learning_rate=0.05), negativity=neg)
    b = train(X, y, spec, TrainConfig(seed=5, learning_rate=0.05), negativity=neg)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


def test_row_permutation_gives_identical_model(rng):
    X, y = separable(rng, 150)
    neg = rng.uniform(0.1, 0.9, size=len(y))
    perm = rng.permutation(len(y))
    spec = RiskSpec(Assembly.NCWS, "logistic")
    cfg = TrainConfig(learning_rate=0.05, seed=2)
    a = train(X, y, spec, cfg, negativity=neg)
    b = train(X[perm], y[perm], spec, cfg, negativity=neg[perm])
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


def test_predict_scores_examples():
    model = LinearModel([1.0, 0.0], 0.0)
    s = predict_scores(model, np.array([[2.0, 5.0]]))
    assert s.raw.tolist() == [2.0]
    assert s.squashed[0] == pytest.approx(0.9640275800758169, abs=1e-15)
    assert np.all(predict_scores(LinearModel.zeros(3), np.ones((4, 3))).raw == 0)
    assert predict_scores(LinearModel([1.0, 0.0], -2.0), np.array([[2.0, 0.0]])).raw[0] == 0.0
    with pytest.raises(ValueError):
        model.decision_function(np.ones((1, 3)))


def test_predict_labels_tie_rule():
    assert predict_labels([0.2, -0.3]).tolist() == [1, -1]
    assert predict_labels([0.0]).tolist() == [-1]
    assert predict_labels([0.4], threshold=0.5).tolist() == [-1]


def test_non_finite_training_aborts(rng):
    X, y = separable(rng, 40)
    with pytest.raises(TrainingError, match="non-finite"):
        train(X * 1e200, y, RiskSpec(Assembly.NAIVE), TrainConfig(learning_rate=1e200))


def test_dimension_and_aux_errors(rng):
    X, y = separable(rng, 10)
    with pytest.raises(ValueError):
        train(X, y[:5], RiskSpec(Assembly.NAIVE))
    with pytest.raises(ValueError):
        train(X, y, RiskSpec(Assembly.NCWS))
    with pytest.raises(ValueError):
        train(X[:1], y[:1], RiskSpec(Assembly.NAIVE))


SPEC_GRID = [RiskSpec(a, b, prior=0.3 if a is Assembly.CPU else None,
                      penalty_ratio=2.0 if a is Assembly.WEIGHTED_PENALTY else None)
             for a, b in itertools.product(Assembly, BaseLoss)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(SPEC_GRID), st.sampled_from([1e-3, 0.1, 3.0]))
def test_training_never_increases_risk(seed, spec, lr):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 40))
    X = rng.normal(size=(n, 3))
    y = np.where(rng.random(n) < 0.4, 1, -1)
    y[:2] = (1, -1)
    neg = rng.uniform(0.01, 0.99, n)
    conf = rng.uniform(0.01, 0.99, n)
    cfg = TrainConfig(learning_rate=lr, epochs=5, batch_size=int(rng.integers(1, 10)))
    theta, history = fit_sgd(X, y, spec, cfg, neg, conf)
    final = empirical_risk(spec, X @ theta[:-1] + theta[-1], y, neg, conf).value
    assert final <= history[0] + 1e-12
    assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))


def test_l2_bounds_weight_norm(rng):
    X, y = separable(rng, 100)
    X = X + rng.normal(size=X.shape)
    lam = 0.5
    model = train(X, y, RiskSpec(Assembly.NAIVE), TrainConfig(learning_rate=0.05, epochs=50,
                                                               l2_lambda=lam))
    xb = np.hstack([X, np.ones((len(X), 1))])
    max_grad = np.max(np.linalg.norm(xb, axis=1)) * abs(loss_derivative("hinge", -10.0))
    assert np.linalg.norm(model.weights) <= max_grad / lam


def test_estimator_api(rng, tmp_path):
    X, y = separable(rng)
    neg = rng.uniform(0.9, 0.99, size=len(y))
    est = PULinearClassifier(risk="ncws", learning_rate=0.01)
    params = est.get_params()
    assert params["risk"] == "ncws" and params["epochs"] == 10
    assert clone(est).get_params() == params
    est.fit(X, y, negativity=neg)
    assert est.score(X, y) == 1.0
    assert est.objective_history_[-1] <= est.objective_history_[0]
    save_model(est, tmp_path / "m.json")
    loaded, _ = load_model(tmp_path / "m.json")
    assert np.array_equal(loaded.decision_function(X), est.decision_function(X))


def test_estimator_defaults_and_label_forms(rng):
    X, y = separable(rng, 60)
    y01 = (y == 1).astype(int)
    a = PULinearClassifier(risk="svmp").fit(X, y)
    b = PULinearClassifier(risk="svmp").fit(X, y01)
    assert np.array_equal(a.decision_function(X), b.decision_function(X))
    assert a.risk_spec_.penalty_ratio == 1.0
    cpu = PULinearClassifier(risk="cpu", loss="double-hinge").fit(X, y)
    assert cpu.risk_spec_.prior == 0.5
    pconf = PULinearClassifier(risk="pconf").fit(X, y, negativity=np.full(60, 0.2))
    assert pconf.training_risk(X, y, negativity=np.full(60, 0.2)) >= 0
    with pytest.raises(ValueError):
        PULinearClassifier(risk="pconf").fit(X, y)
    with pytest.raises(ValueError):
        PULinearClassifier().fit(X, np.full(60, 2))


def test_estimator_in_pipeline_with_sparse(rng):
    X, y = separable(rng, 80)
    X = np.abs(X)
    X[:, 1] = 0
    neg = rng.uniform(0.2, 0.8, 80)
    pipe = make_pipeline(MinMaxScaler(), PULinearClassifier(risk="ncws", learning_rate=0.05))
    pipe.fit(X, y, pulinearclassifier__negativity=neg)
    assert pipe.predict(X).shape == (80,)
    dense = PULinearClassifier(standardize=False, learning_rate=0.05).fit(X, y)
    sparse = PULinearClassifier(standardize=False, learning_rate=0.05).fit(sp.csr_matrix(X), y)
    assert np.allclose(dense.decision_function(X), sparse.decision_function(sp.csr_matrix(X)))
