"""Synthetic positive-unlabelled review data and an exact finite-distribution oracle.

The generator draws a hidden helpful/unhelpful label, class-dependent latent
features and a uniform age per review. A truly helpful review only gets an
observed helpful vote with a probability (its *exposure*) that grows with
age, so young helpful reviews stay unlabelled.

The oracle works on distributions over a handful of support points, where
risks are finite sums and can be compared exactly.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy.special import expit

from .data import Dataset, ReviewRecord
from .losses import eval_loss

WORDS = (
    "food", "place", "service", "time", "great", "good", "staff", "order", "table",
    "price", "menu", "nice", "went", "back", "would", "again", "came", "dinner",
    "lunch", "really", "friendly", "delicious", "location", "quality", "experience",
)


def make_exposure(spec, max_age_days):
    """Exposure curve from ``linear``, ``logistic`` or ``step:<age>``."""
    if callable(spec):
        return spec
    scale = max(max_age_days, 1)
    if spec == "linear":
        return lambda a: np.asarray(a, dtype=np.float64) / scale
    if spec == "logistic":
        return lambda a: expit((np.asarray(a, dtype=np.float64) - scale / 2) / (scale / 10))
    kind, _, arg = spec.partition(":")
    if kind == "step" and arg:
        a0 = float(arg)
        return lambda a: (np.asarray(a, dtype=np.float64) >= a0).astype(np.float64)
    raise ValueError(f"unknown exposure {spec!r}")


@dataclass(frozen=True)
class SynthConfig:
    n_instances: int = 20_000
    positive_fraction: float = 0.45
    max_age_days: int = 1000
    exposure: Union[str, Callable] = "linear"
    feature_noise: float = 1.0
    seed: int = 0
    n_users: int = 0
    exposure_fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_instances < 1:
            raise ValueError("n_instances must be >= 1")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ValueError("positive_fraction must lie in (0, 1)")
        if self.max_age_days < 0 or self.feature_noise < 0:
            raise ValueError("max_age_days and feature_noise must be >= 0")
        fn = make_exposure(self.exposure, self.max_age_days)
        grid = np.broadcast_to(fn(np.arange(self.max_age_days + 1)),
                               (self.max_age_days + 1,)).astype(np.float64)
        if np.any((grid < 0) | (grid > 1)):
            raise ValueError("exposure must map ages into [0, 1]")
        if np.any(np.diff(grid) < 0):
            raise ValueError("exposure must be non-decreasing in age")
        object.__setattr__(self, "exposure_fn", fn)


def _text(rng, n_words):
    words = rng.choice(WORDS, size=n_words)
    out, i = [], 0
    while i < n_words:
        k = int(rng.integers(4, 9))
        chunk = " ".join(words[i:i + k])
        out.append(chunk.capitalize() + ("?" if rng.random() < 0.1 else "."))
        i += k
    return " ".join(out)


def generate(config):
    """Draw a synthetic corpus.

    Returns the dataset with observed labels (positive iff a true positive
    was exposed) and the hidden true labels as a +1/-1 array. The latent 2-D
    features surface as the rating (first coordinate) and the review length
    (second coordinate).
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_instances
    truth = np.where(rng.random(n) < config.positive_fraction, 1, -1).astype(np.int8)
    latent = truth[:, None] * 1.0 + config.feature_noise * rng.standard_normal((n, 2))
    ages = rng.integers(0, config.max_age_days + 1, size=n)
    exposed = rng.random(n) < np.broadcast_to(config.exposure_fn(ages), (n,))
    observed = np.where((truth == 1) & exposed, 1, -1).astype(np.int8)
    n_users = config.n_users or max(1, n // 10)
    users = rng.integers(0, n_users, size=n)
    records = []
    for i in range(n):
        n_words = max(1, int(round(20 + 6 * latent[i, 1])))
        votes = 1 + int(rng.poisson(1.0)) if observed[i] == 1 else 0
        records.append(ReviewRecord(
            id=f"r{i:06d}",
            user_id=f"u{users[i]:05d}",
            text=_text(rng, n_words),
            rating=round(float(np.clip(3.0 + latent[i, 0], 1.0, 5.0)), 3),
            age_days=int(ages[i]),
            helpful_votes=votes,
        ))
    truth.setflags(write=False)
    return Dataset(records, observed), truth


def write_truth(ids, truth, path):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "true_label"])
        writer.writerows(zip(ids, (int(t) for t in truth)))


def read_truth(path):
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return {row["id"]: int(row["true_label"]) for row in csv.DictReader(fh)}


class DiscreteDistribution:
    """Joint distribution ``p(x, y)`` over finitely many feature points.

    Parameters
    ----------
    support : array (K, d)
        Feature points.
    p_joint : array (K, 2)
        ``p(x_k, y=+1)`` and ``p(x_k, y=-1)``; must sum to one.
    """

    def __init__(self, support, p_joint):
        support = np.atleast_2d(np.asarray(support, dtype=np.float64))
        p_joint = np.asarray(p_joint, dtype=np.float64)
        if p_joint.shape != (support.shape[0], 2):
            raise ValueError("p_joint must have shape (K, 2)")
        if np.any(p_joint < 0) or not np.isclose(p_joint.sum(), 1.0, atol=1e-12):
            raise ValueError("p_joint must be non-negative and sum to 1")
        self.support = support
        self.p_joint = p_joint

    @property
    def p_x(self):
        return self.p_joint.sum(axis=1)

    @property
    def pi_plus(self):
        return float(self.p_joint[:, 0].sum())

    @property
    def pi_minus(self):
        return float(self.p_joint[:, 1].sum())

    @property
    def p_x_given_pos(self):
        return self.p_joint[:, 0] / self.pi_plus

    @property
    def p_x_given_neg(self):
        return self.p_joint[:, 1] / self.pi_minus

    @property
    def negativity(self):
        """Exact ``p(y=-1 | x)`` at every support point."""
        return self.p_joint[:, 1] / self.p_x

    def check_negativity(self):
        n = self.negativity
        if np.any((n <= 0.0) | (n >= 1.0)):
            raise ValueError("p(y=-1|x) must lie strictly inside (0, 1) at every support point")
        return n

    @classmethod
    def random(cls, rng, n_points=8, dim=2):
        """Random distribution with every posterior strictly inside (0, 1)."""
        support = rng.normal(size=(n_points, dim))
        p_joint = rng.uniform(0.05, 1.0, size=(n_points, 2))
        return cls(support, p_joint / p_joint.sum())


def exact_risk(dist, model, form="joint", base="hinge", epsilon=None):
    """Population risk of ``model`` under ``dist``, summed over the support.

    ``joint`` is ``pi+ E+[l(g)] + pi- E-[l(-g)]``. ``weighted`` rewrites it
    over the negative class only, ``pi- E-[(1 - n) / n * l(g) + l(-g)]`` with
    ``n = p(y=-1|x)``; ``epsilon`` clamps ``n`` to [eps, 1 - eps] there.
    """
    g = model.decision_function(dist.support)
    lp = eval_loss(base, g)
    ln = eval_loss(base, -g)
    if form == "joint":
        return float(dist.pi_plus * np.sum(dist.p_x_given_pos * lp)
                     + dist.pi_minus * np.sum(dist.p_x_given_neg * ln))
    if form == "weighted":
        n = dist.check_negativity()
        if epsilon is not None:
            n = np.clip(n, epsilon, 1.0 - epsilon)
        return float(dist.pi_minus * np.sum(dist.p_x_given_neg * ((1.0 - n) / n * lp + ln)))
    raise ValueError(f"unknown risk form {form!r}")


def pointwise_gap(dist):
    """Largest ``|pi+ p(x|+1) - pi- p(x|-1) (1 - n) / n|`` over the support."""
    n = dist.check_negativity()
    lhs = dist.pi_plus * dist.p_x_given_pos
    rhs = dist.pi_minus * dist.p_x_given_neg * (1.0 - n) / n
    return float(np.max(np.abs(lhs - rhs)))


def verify_identity(dist, models, base="hinge", epsilon=None, pointwise_tol=1e-12):
    """Largest ``|joint - weighted|`` over ``models``.

    Also checks the pointwise density identity behind the rewrite and raises
    ``ArithmeticError`` if it is off by more than ``pointwise_tol``.
    """
    gap = pointwise_gap(dist)
    if gap > pointwise_tol:
        raise ArithmeticError(f"pointwise identity violated by {gap:.3e}")
    return max(abs(exact_risk(dist, m, "joint", base)
                   - exact_risk(dist, m, "weighted", base, epsilon)) for m in models)


def bayes_labels(dist):
    """+1 where ``p(y=+1 | x) > 0.5``, else -1."""
    return np.where(dist.p_joint[:, 0] / dist.p_x > 0.5, 1, -1).astype(np.int8)
