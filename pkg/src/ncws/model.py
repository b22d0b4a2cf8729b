"""Linear scoring model and its deterministic mini-batch subgradient trainer."""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.preprocessing import StandardScaler
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .losses import (Assembly, RiskSpec, default_penalty_ratio, empirical_risk,
                     instance_terms, instance_weights)
from .negativity import positivity_default

logger = logging.getLogger(__name__)

MIN_STEP = 1e-8
MODEL_FORMAT = "ncws-linear-model"
MODEL_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).ravel()
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def feature_dim(self):
        return self.weights.shape[0]

    @classmethod
    def zeros(cls, feature_dim):
        return cls(np.zeros(feature_dim), 0.0)

    @property
    def params(self):
        return np.append(self.weights, self.bias)

    @classmethod
    def from_params(cls, params):
        params = np.asarray(params, dtype=np.float64)
        return cls(params[:-1], params[-1])

    def decision_function(self, X):
        if X.shape[1] != self.feature_dim:
            raise ValueError(f"X has {X.shape[1]} features, model expects {self.feature_dim}")
        return np.asarray(X @ self.weights).ravel() + self.bias


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 10
    batch_size: int = 100
    l2_lambda: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")


def _canonical_order(X, labels, negativity, confidence):
    # Sort rows by a content digest so the seed-keyed shuffle does not depend on input order.
    X = sp.csr_matrix(X) if sp.issparse(X) else np.ascontiguousarray(X, dtype=np.float64)
    aux = [np.asarray(labels, dtype=np.float64)]
    for v in (negativity, confidence):
        if v is not None:
            aux.append(np.asarray(v, dtype=np.float64))
    aux = np.ascontiguousarray(np.column_stack(aux))
    digests = []
    for i in range(X.shape[0]):
        h = hashlib.blake2b(aux[i].tobytes(), digest_size=16)
        if sp.issparse(X):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            h.update(X.indices[lo:hi].tobytes())
            h.update(X.data[lo:hi].tobytes())
        else:
            h.update(X[i].tobytes())
        digests.append(h.digest())
    return np.array(sorted(range(len(digests)), key=digests.__getitem__), dtype=np.intp)


def _objective(spec, theta, X, y, neg, conf, l2):
    w, b = theta[:-1], theta[-1]
    scores = np.asarray(X @ w).ravel() + b
    risk = empirical_risk(spec, scores, y, neg, conf).value
    return risk + 0.5 * l2 * float(w @ w)


def fit_sgd(X, labels, spec, config, negativity=None, confidence=None):
    """Minimise the regularised risk with mini-batch subgradient descent.

    Returns the parameter vector ``(weights..., bias)`` and the objective
    after every epoch (entry 0 is the starting objective). An epoch that
    raises the full-batch objective is undone and the step halved.
    """
    y = np.asarray(labels, dtype=np.int8)
    n, d = X.shape
    if n != len(y):
        raise ValueError(f"X has {n} rows but {len(y)} labels were given")
    if n < 2:
        raise ValueError("training needs at least two instances")
    order = _canonical_order(X, y, negativity, confidence)
    X = X[order]
    y = y[order]
    neg = None if negativity is None else np.asarray(negativity, dtype=np.float64)[order]
    conf = None if confidence is None else np.asarray(confidence, dtype=np.float64)[order]

    m = instance_weights(spec, y)
    rng = np.random.default_rng(config.seed)
    theta = np.zeros(d + 1)
    step = config.learning_rate
    l2 = config.l2_lambda
    history = [_objective(spec, theta, X, y, neg, conf, l2)]
    for epoch in range(config.epochs):
        start = theta.copy()
        perm = rng.permutation(n)
        with np.errstate(over="ignore", invalid="ignore"):
            for lo in range(0, n, config.batch_size):
                idx = perm[lo:lo + config.batch_size]
                Xb = X[idx]
                scores = np.asarray(Xb @ theta[:-1]).ravel() + theta[-1]
                _, df = _terms(spec, scores, y[idx], neg, conf, idx)
                coef = m[idx] * df * (n / len(idx))
                grad = np.append(np.asarray(Xb.T @ coef).ravel() + l2 * theta[:-1], coef.sum())
                theta -= step * grad
        if not np.all(np.isfinite(theta)):
            raise TrainingError(
                f"non-finite parameters after epoch {epoch + 1} "
                f"(assembly={spec.assembly.value}, step={step:g}); lower the learning rate")
        obj = _objective(spec, theta, X, y, neg, conf, l2)
        if obj > history[-1]:
            theta = start
            if step <= MIN_STEP:
                logger.info("epoch %d raised the objective at the minimum step; stopping", epoch + 1)
                history.append(history[-1])
                break
            step = max(step / 2.0, MIN_STEP)
            history.append(history[-1])
        else:
            history.append(obj)
    return theta, history


def _terms(spec, scores, y, neg, conf, idx):
    return instance_terms(spec, scores, y,
                          None if neg is None else neg[idx],
                          None if conf is None else conf[idx])


def train(features, labels, spec, config=TrainConfig(), negativity=None, confidence=None):
    """Train a linear model from zero weights by minimising ``spec``'s risk."""
    X = features if sp.issparse(features) else np.asarray(features, dtype=np.float64)
    if spec.needs_negativity and negativity is None:
        raise ValueError("the ncws risk needs negativity scores")
    if spec.needs_confidence and confidence is None:
        raise ValueError("the pconf risk needs confidence scores")
    theta, _ = fit_sgd(X, labels, spec, config, negativity, confidence)
    return LinearModel.from_params(theta)


class Scores(NamedTuple):
    raw: np.ndarray
    squashed: np.ndarray


def predict_scores(model, features):
    """Raw decision values ``w.x + b`` and their tanh-squashed copy in [-1, 1]."""
    raw = model.decision_function(features)
    return Scores(raw, np.tanh(raw))


def predict_labels(scores, threshold=0.0):
    """+1 where the score exceeds ``threshold``, -1 otherwise (ties go to -1)."""
    return np.where(np.asarray(scores) > threshold, 1, -1).astype(np.int8)


def _as_pm1(y):
    y = np.asarray(y).ravel()
    uniq = set(np.unique(y).tolist())
    if not uniq <= {1, -1, 0}:
        raise ValueError(f"labels must be in {{+1, -1}} (or {{1, 0}}), got {sorted(uniq)}")
    return np.where(y == 1, 1, -1).astype(np.int8)


class PULinearClassifier(ClassifierMixin, BaseEstimator):
    """Linear classifier trained on positive and unlabelled data.

    Parameters
    ----------
    risk : {'naive', 'ncws', 'cpu', 'pconf', 'svmp'}
        Risk assembly to minimise.
    loss : {'hinge', 'double-hinge', 'logistic'}
        Base margin loss.
    prior : float, optional
        Positive class prior for ``cpu``. Defaults to the labelled-positive
        fraction of the training labels.
    penalty_ratio : float, optional
        Positive-class penalty for ``svmp``. Defaults to the unlabelled to
        positive count ratio of the training labels.
    learning_rate, epochs, batch_size, l2_lambda : optimiser settings.
    standardize : bool
        Scale features to unit variance (and zero mean when dense) using the
        training data.
    random_state : int
        Seed for the mini-batch shuffle.

    Notes
    -----
    ``fit`` takes labels in {+1, -1} where -1 means *unlabelled*, plus
    per-instance ``negativity`` (``ncws``; also the default source of
    ``confidence`` for ``pconf``) or ``confidence`` arrays.
    """

    def __init__(self, risk="naive", loss="hinge", prior=None, penalty_ratio=None,
                 learning_rate=1e-4, epochs=10, batch_size=100, l2_lambda=1e-4,
                 standardize=True, random_state=0):
        self.risk = risk
        self.loss = loss
        self.prior = prior
        self.penalty_ratio = penalty_ratio
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.l2_lambda = l2_lambda
        self.standardize = standardize
        self.random_state = random_state

    def _risk_spec(self, y):
        assembly = Assembly(self.risk)
        prior = self.prior
        if assembly is Assembly.CPU and prior is None:
            prior = float(np.mean(y == 1))
        ratio = self.penalty_ratio
        if assembly is Assembly.WEIGHTED_PENALTY and ratio is None:
            ratio = default_penalty_ratio(y)
        return RiskSpec(assembly, self.loss, prior=prior, penalty_ratio=ratio)

    def fit(self, X, y, negativity=None, confidence=None):
        X, y = check_X_y(X, y, accept_sparse="csr", dtype=np.float64)
        y = _as_pm1(y)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([-1, 1])
        self.risk_spec_ = self._risk_spec(y)
        if self.risk_spec_.needs_confidence and confidence is None:
            if negativity is None:
                raise ValueError("pconf needs confidence or negativity scores")
            confidence = positivity_default(negativity)
        if self.standardize:
            self.scaler_ = StandardScaler(with_mean=not sp.issparse(X)).fit(X)
            X = self.scaler_.transform(X)
        else:
            self.scaler_ = None
        config = TrainConfig(self.learning_rate, self.epochs, self.batch_size,
                             self.l2_lambda, self.random_state)
        if self.risk_spec_.needs_negativity and negativity is None:
            raise ValueError("the ncws risk needs negativity scores")
        theta, self.objective_history_ = fit_sgd(X, y, self.risk_spec_, config,
                                                 negativity, confidence)
        self.model_ = LinearModel.from_params(theta)
        return self

    def _transform(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X if self.scaler_ is None else self.scaler_.transform(X)

    def decision_function(self, X):
        return self.model_.decision_function(self._transform(X))

    def predict(self, X):
        return predict_labels(self.decision_function(X))

    def training_risk(self, X, y, negativity=None, confidence=None):
        """Training risk of the fitted model on ``(X, y)`` (without the L2 term)."""
        y = _as_pm1(y)
        if self.risk_spec_.needs_confidence and confidence is None and negativity is not None:
            confidence = positivity_default(negativity)
        return empirical_risk(self.risk_spec_, self.decision_function(X), y,
                              negativity, confidence).value

    def to_dict(self):
        check_is_fitted(self, "model_")
        out = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "feature_dim": self.model_.feature_dim,
            "weights": self.model_.weights.tolist(),
            "bias": self.model_.bias,
            "params": self.get_params(),
            "risk_spec": {"assembly": self.risk_spec_.assembly.value,
                          "base": self.risk_spec_.base.value,
                          "prior": self.risk_spec_.prior,
                          "penalty_ratio": self.risk_spec_.penalty_ratio},
        }
        if self.scaler_ is not None:
            out["feature_mean"] = None if self.scaler_.mean_ is None else self.scaler_.mean_.tolist()
            out["feature_scale"] = self.scaler_.scale_.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
            raise ValueError("not a saved linear model (format/version mismatch)")
        est = cls(**data["params"])
        est.model_ = LinearModel(data["weights"], data["bias"])
        if est.model_.feature_dim != data["feature_dim"]:
            raise ValueError("feature_dim does not match the stored weights")
        est.n_features_in_ = data["feature_dim"]
        est.classes_ = np.array([-1, 1])
        est.risk_spec_ = RiskSpec(**data["risk_spec"])
        if "feature_scale" in data:
            scaler = StandardScaler(with_mean=data["feature_mean"] is not None)
            scaler.scale_ = np.asarray(data["feature_scale"])
            scaler.mean_ = None if data["feature_mean"] is None else np.asarray(data["feature_mean"])
            scaler.n_features_in_ = data["feature_dim"]
            scaler.var_ = scaler.scale_ ** 2
            est.scaler_ = scaler
        else:
            est.scaler_ = None
        return est


def save_model(estimator, path, extra=None):
    data = estimator.to_dict()
    if extra:
        data.update(extra)
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return PULinearClassifier.from_dict(data), data
