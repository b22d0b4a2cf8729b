"""Margin losses and the empirical risk assemblies built on them.

Every assembly is written as a weighted sum over instances,

    risk = sum_i m_i * f_i(g_i),

where ``g_i`` is the model score of instance ``i``, ``f_i`` depends on the
assembly and on the instance's observed label, and ``m_i`` is a normaliser
computed over the whole training set. Keeping ``m_i`` global makes the
mini-batch gradients used by the trainer unbiased estimates of the full one.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit


class BaseLoss(str, enum.Enum):
    HINGE = "hinge"
    DOUBLE_HINGE = "double-hinge"
    LOGISTIC = "logistic"


class Assembly(str, enum.Enum):
    NAIVE = "naive"
    NCWS = "ncws"
    CPU = "cpu"
    PCONF = "pconf"
    WEIGHTED_PENALTY = "svmp"


def eval_loss(base, z):
    """Value of the margin loss ``base`` at margin ``z`` (scalar or array)."""
    base = BaseLoss(base)
    z = np.asarray(z, dtype=np.float64)
    if base is BaseLoss.HINGE:
        out = np.maximum(0.0, 1.0 - z)
    elif base is BaseLoss.DOUBLE_HINGE:
        out = np.maximum(-z, np.maximum(0.0, 0.5 - 0.5 * z))
    else:
        out = np.logaddexp(0.0, -z)
    return float(out) if out.ndim == 0 else out


def loss_derivative(base, z):
    """Derivative of the margin loss in ``z``.

    At kinks the flat-side value is used: hinge has slope 0 at z=1, double
    hinge has slope 0 at z=1 and -1/2 at z=-1.
    """
    base = BaseLoss(base)
    z = np.asarray(z, dtype=np.float64)
    if base is BaseLoss.HINGE:
        out = np.where(z < 1.0, -1.0, 0.0)
    elif base is BaseLoss.DOUBLE_HINGE:
        out = np.where(z < -1.0, -1.0, np.where(z < 1.0, -0.5, 0.0))
    else:
        out = -expit(-z)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RiskSpec:
    """Which risk to minimise, its base loss and assembly-specific parameters."""

    assembly: Assembly = Assembly.NAIVE
    base: BaseLoss = BaseLoss.HINGE
    prior: Optional[float] = None
    penalty_ratio: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "assembly", Assembly(self.assembly))
        object.__setattr__(self, "base", BaseLoss(self.base))
        if self.assembly is Assembly.CPU:
            if self.prior is None:
                raise ValueError("the cpu risk requires a class prior")
            if not 0.0 <= self.prior < 1.0:
                raise ValueError(f"prior must lie in [0, 1), got {self.prior}")
        if self.assembly is Assembly.WEIGHTED_PENALTY:
            if self.penalty_ratio is None or not self.penalty_ratio > 0:
                raise ValueError("the svmp risk requires penalty_ratio > 0")

    @property
    def needs_negativity(self):
        return self.assembly is Assembly.NCWS

    @property
    def needs_confidence(self):
        return self.assembly is Assembly.PCONF


@dataclass
class RiskValue:
    value: float
    gradient: Optional[np.ndarray] = None


def _as_labels(labels, n):
    y = np.asarray(labels, dtype=np.int8)
    if y.shape != (n,):
        raise ValueError("scores and labels must have the same length")
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be +1 (positive) or -1 (unlabelled)")
    return y


def _check_probabilities(values, mask, name):
    if values is None:
        raise ValueError(f"{name} scores are required")
    values = np.asarray(values, dtype=np.float64)
    sel = values[mask]
    if np.any(~np.isfinite(sel)):
        raise ValueError(f"missing {name} score for a required instance")
    if np.any((sel <= 0.0) | (sel >= 1.0)):
        raise ValueError(f"{name} scores must lie strictly inside (0, 1)")
    return values


def instance_weights(spec, labels):
    """Normalisers ``m_i`` so that the risk equals ``sum_i m_i f_i``."""
    y = np.asarray(labels)
    n = len(y)
    if n == 0:
        raise ValueError("empty input")
    pos = y == 1
    n_pos = int(pos.sum())
    n_unl = n - n_pos
    if spec.assembly is Assembly.CPU:
        if n_pos == 0 or n_unl == 0:
            raise ValueError("the cpu risk needs at least one positive and one unlabelled instance")
        return np.where(pos, 1.0 / n_pos, 1.0 / n_unl)
    if spec.assembly is Assembly.PCONF:
        if n_pos == 0:
            raise ValueError("the pconf risk needs at least one positive instance")
        return np.where(pos, 1.0 / n_pos, 0.0)
    return np.full(n, 1.0 / n)


def instance_terms(spec, scores, labels, negativity=None, confidence=None):
    """Per-instance loss ``f_i(g_i)`` and its derivative in ``g_i``."""
    g = np.asarray(scores, dtype=np.float64)
    y = _as_labels(labels, len(g))
    pos = y == 1
    base = spec.base

    def lossd(z):
        return eval_loss(base, z) * np.ones_like(z), loss_derivative(base, z) * np.ones_like(z)

    lp, dp = lossd(g)      # loss for predicting positive: l(g)
    ln, dn = lossd(-g)     # loss for predicting negative: l(-g)
    a = spec.assembly
    if a is Assembly.NAIVE:
        f = np.where(pos, lp, ln)
        df = np.where(pos, dp, -dn)
    elif a is Assembly.NCWS:
        n = _check_probabilities(negativity, ~pos, "negativity")
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(pos, 0.0, (1.0 - n) / n)
        f = np.where(pos, lp, w * lp + ln)
        df = np.where(pos, dp, w * dp - dn)
    elif a is Assembly.CPU:
        f = np.where(pos, spec.prior * (lp - ln), ln)
        df = np.where(pos, spec.prior * (dp + dn), -dn)
    elif a is Assembly.PCONF:
        r = _check_probabilities(confidence, pos, "confidence")
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(pos, (1.0 - r) / r, 0.0)
        f = np.where(pos, lp + w * ln, 0.0)
        df = np.where(pos, dp - w * dn, 0.0)
    else:
        f = np.where(pos, spec.penalty_ratio * lp, ln)
        df = np.where(pos, spec.penalty_ratio * dp, -dn)
    return f, df


def empirical_risk(spec, scores, labels, negativity=None, confidence=None):
    """Risk value and its gradient with respect to the scores."""
    g = np.asarray(scores, dtype=np.float64)
    if g.size == 0:
        raise ValueError("empty input")
    m = instance_weights(spec, np.asarray(labels))
    f, df = instance_terms(spec, g, labels, negativity, confidence)
    return RiskValue(float(np.sum(m * f)), m * df)


def risk_naive(scores, labels, base=BaseLoss.HINGE):
    """Mean loss treating every unlabelled instance as negative."""
    return empirical_risk(RiskSpec(Assembly.NAIVE, base), scores, labels)


def risk_ncws(scores, labels, negativity, base=BaseLoss.HINGE):
    """Negativity-weighted risk.

    Positives contribute ``l(g)``; an unlabelled instance with negativity
    ``n`` contributes ``(1 - n) / n * l(g) + l(-g)``. The sum is divided by N.
    ``negativity`` is aligned with ``scores``; entries for positives are ignored.
    """
    return empirical_risk(RiskSpec(Assembly.NCWS, base), scores, labels, negativity=negativity)


def risk_cpu(scores, labels, prior, base=BaseLoss.DOUBLE_HINGE):
    """Convex PU risk ``pi * mean_P[l(g) - l(-g)] + mean_U[l(-g)]``."""
    prior = getattr(prior, "pi_plus", prior)
    return empirical_risk(RiskSpec(Assembly.CPU, base, prior=prior), scores, labels)


def risk_pconf(scores, labels, confidence, base=BaseLoss.HINGE):
    """Positive-confidence risk ``mean_P[l(g) + (1 - r) / r * l(-g)]``.

    Unlabelled instances contribute nothing.
    """
    return empirical_risk(RiskSpec(Assembly.PCONF, base), scores, labels, confidence=confidence)


def risk_weighted_penalty(scores, labels, penalty_ratio, base=BaseLoss.HINGE):
    """Class-weighted risk with the positive losses multiplied by ``penalty_ratio``."""
    if not penalty_ratio > 0:
        raise ValueError(f"penalty_ratio must be > 0, got {penalty_ratio}")
    spec = RiskSpec(Assembly.WEIGHTED_PENALTY, base, penalty_ratio=penalty_ratio)
    return empirical_risk(spec, scores, labels)


def default_penalty_ratio(labels):
    """Unlabelled-to-positive count ratio of an (un-balanced) training set."""
    y = np.asarray(labels)
    n_pos = int(np.count_nonzero(y == 1))
    if n_pos == 0:
        raise ValueError("penalty ratio undefined without positives")
    return (len(y) - n_pos) / n_pos


def risk_gradient(spec, model, X, labels, negativity=None, confidence=None):
    """Gradient of the risk in ``(weights..., bias)`` for a linear model."""
    scores = model.decision_function(X)
    dg = empirical_risk(spec, scores, labels, negativity, confidence).gradient
    return np.append(X.T @ dg, dg.sum())
