"""Negativity scores for unlabelled instances and the weights derived from them.

The negativity of an instance is the probability that it belongs to the
latent negative class. For reviews it grows with the review's age: an old
review that still has no helpful votes is probably not helpful.
"""

import csv
import math
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

DEFAULT_EPSILON = 1e-3


def _check_epsilon(epsilon):
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5), got {epsilon}")


def clamp(value, epsilon=DEFAULT_EPSILON):
    return np.clip(value, epsilon, 1.0 - epsilon)


def negativity_age(age_days, max_age_days, epsilon=DEFAULT_EPSILON):
    """Age-based negativity ``log(d + 1) / log(max_d + 2)`` clamped to [eps, 1 - eps].

    Works on scalars and arrays. The ratio of logarithms does not depend on
    the logarithm base.
    """
    _check_epsilon(epsilon)
    age = np.asarray(age_days, dtype=np.float64)
    if max_age_days < 0:
        raise ValueError("max_age_days must be >= 0")
    if np.any(age < 0):
        raise ValueError("age_days must be >= 0")
    if np.any(age > max_age_days):
        raise ValueError(f"age_days exceeds max_age_days={max_age_days}")
    raw = np.log1p(age) / math.log(max_age_days + 2.0)
    out = clamp(raw, epsilon)
    return float(out) if out.ndim == 0 else out


def negativity_weight(n):
    """Weight ``(1 - n) / n`` on the positive-direction loss of an unlabelled instance."""
    n = np.asarray(n, dtype=np.float64)
    out = (1.0 - n) / n
    return float(out) if out.ndim == 0 else out


def positivity_default(n, epsilon=DEFAULT_EPSILON):
    """Default positive confidence ``1 - n``, clamped like the negativity."""
    out = clamp(1.0 - np.asarray(n, dtype=np.float64), epsilon)
    return float(out) if out.ndim == 0 else out


class AgeNegativity(TransformerMixin, BaseEstimator):
    """Map review ages to negativity scores.

    Parameters
    ----------
    max_age_days : int or None
        Age of the oldest review in the corpus. Learned from ``fit`` when None.
    epsilon : float
        Clamp margin keeping scores inside (0, 1).

    Ages above the fitted maximum (unseen at fit time) map to ``1 - epsilon``.
    """

    def __init__(self, max_age_days=None, epsilon=DEFAULT_EPSILON):
        self.max_age_days = max_age_days
        self.epsilon = epsilon

    def fit(self, X, y=None):
        _check_epsilon(self.epsilon)
        ages = _ages(X)
        if self.max_age_days is None:
            self.max_age_ = int(ages.max()) if ages.size else 0
        else:
            self.max_age_ = int(self.max_age_days)
        return self

    def transform(self, X):
        check_is_fitted(self, "max_age_")
        ages = _ages(X)
        out = np.full(ages.shape, 1.0 - self.epsilon)
        seen = ages <= self.max_age_
        out[seen] = negativity_age(ages[seen], self.max_age_, self.epsilon)
        return out


def _ages(X):
    if len(X) and hasattr(X[0], "age_days"):
        return np.array([r.age_days for r in X], dtype=np.int64)
    return np.asarray(X, dtype=np.int64).ravel()


class ConstantNegativity(TransformerMixin, BaseEstimator):
    """Assign every instance the same negativity."""

    def __init__(self, value=0.5, epsilon=DEFAULT_EPSILON):
        self.value = value
        self.epsilon = epsilon

    def fit(self, X, y=None):
        _check_epsilon(self.epsilon)
        if not 0.0 < self.value < 1.0:
            raise ValueError(f"constant negativity must lie in (0, 1), got {self.value}")
        return self

    def transform(self, X):
        return np.full(len(X), clamp(float(self.value), self.epsilon))


class TableNegativity(TransformerMixin, BaseEstimator):
    """Look up per-id negativity scores from a ``id,score`` CSV file.

    Ids missing from the table raise ``KeyError``.
    """

    def __init__(self, path, epsilon=DEFAULT_EPSILON):
        self.path = path
        self.epsilon = epsilon

    def fit(self, X=None, y=None):
        _check_epsilon(self.epsilon)
        self.scores_ = read_score_table(self.path)
        return self

    def transform(self, X):
        check_is_fitted(self, "scores_")
        return clamp(np.array([self.scores_[r.id] for r in X], dtype=np.float64),
                     self.epsilon)


def read_score_table(path):
    scores = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "id":
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: expected 'id,score' rows, got {row!r}")
            value = float(row[1])
            if not 0.0 < value < 1.0:
                raise ValueError(f"{path}: score for {row[0]!r} outside (0, 1)")
            scores[row[0]] = value
    return scores


def make_negativity(source="age", max_age_days=None, epsilon=DEFAULT_EPSILON):
    """Build a negativity transformer from a ``age|constant:<v>|file:<path>`` string."""
    if source == "age":
        return AgeNegativity(max_age_days=max_age_days, epsilon=epsilon)
    kind, _, arg = source.partition(":")
    if kind == "constant" and arg:
        return ConstantNegativity(float(arg), epsilon=epsilon)
    if kind == "file" and arg:
        return TableNegativity(arg, epsilon=epsilon)
    raise ValueError(f"unknown negativity source {source!r}")
