"""Classification metrics, paired significance, correlation and score analyses."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

# 95% quantile of the chi-squared distribution with one degree of freedom.
CHI2_1DF_05 = 3.841


def _paired(*arrays):
    arrays = [np.asarray(a).ravel() for a in arrays]
    if len({len(a) for a in arrays}) != 1:
        raise ValueError("inputs must have equal lengths")
    return arrays


@dataclass(frozen=True)
class PRF1:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int


def prf1(predicted, truth):
    """Precision, recall and F1 of the +1 class; zero denominators give 0."""
    pred, true = _paired(predicted, truth)
    if len(pred) == 0:
        raise ValueError("empty input")
    pp, tp_mask = pred == 1, true == 1
    tp = int(np.count_nonzero(pp & tp_mask))
    fp = int(np.count_nonzero(pp & ~tp_mask))
    fn = int(np.count_nonzero(~pp & tp_mask))
    tn = len(pred) - tp - fp - fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF1(precision, recall, f1, tp, fp, fn, tn)


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    statistic: float
    significant_05: bool


def mcnemar_from_counts(b, c):
    """Continuity-corrected McNemar statistic ``max(|b - c| - 1, 0)^2 / (b + c)``."""
    if b + c == 0:
        return McNemarResult(b, c, 0.0, False)
    stat = max(abs(b - c) - 1, 0) ** 2 / (b + c)
    return McNemarResult(int(b), int(c), float(stat), stat > CHI2_1DF_05)


def mcnemar(pred_a, pred_b, truth):
    """Compare two classifiers on the same instances.

    ``b`` counts instances A gets right and B wrong, ``c`` the reverse.
    """
    a, b_, t = _paired(pred_a, pred_b, truth)
    ok_a, ok_b = a == t, b_ == t
    return mcnemar_from_counts(int(np.count_nonzero(ok_a & ~ok_b)),
                               int(np.count_nonzero(~ok_a & ok_b)))


def _pearson(x, y):
    dx, dy = x - x.mean(), y - y.mean()
    return float(np.sum(dx * dy) / np.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))


def correlations(x, y):
    """Pearson and Spearman (Pearson on average ranks) correlation."""
    x, y = _paired(x, y)
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    if len(x) < 3:
        raise ValueError("need at least 3 points")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("undefined correlation: constant input")
    return _pearson(x, y), _pearson(rankdata(x), rankdata(y))


@dataclass(frozen=True)
class AgeBin:
    age_bin: int
    helpful_probability: float
    review_count: int


def age_helpfulness_curve(dataset, bin_width_days=1):
    """Share of positive reviews per age bin; empty bins are left out.

    ``age_bin`` is the lower edge of the bin in days.
    """
    if bin_width_days < 1:
        raise ValueError("bin_width_days must be >= 1")
    bins = dataset.ages // bin_width_days
    pos = dataset.labels == 1
    counts = np.bincount(bins)
    hits = np.bincount(bins, weights=pos)
    return [AgeBin(int(b * bin_width_days), float(hits[b] / counts[b]), int(counts[b]))
            for b in np.flatnonzero(counts)]


def curve_correlations(curve):
    ages = [row.age_bin for row in curve]
    probs = [row.helpful_probability for row in curve]
    return correlations(ages, probs)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray


def score_histogram(scores, n_bins=20):
    """Counts over ``n_bins`` uniform bins on [-1, 1].

    Bins are half-open ``[lo, hi)`` except the last, which also takes 1.0.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    s = np.asarray(scores, dtype=np.float64).ravel()
    if np.any((s < -1.0) | (s > 1.0)):
        raise ValueError("scores must be squashed into [-1, 1]")
    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    idx = np.minimum(np.floor((s + 1.0) / 2.0 * n_bins).astype(np.int64), n_bins - 1)
    return Histogram(edges, np.bincount(idx, minlength=n_bins))


@dataclass(frozen=True)
class FlipStats:
    flipped: int
    base_negative: int

    @property
    def pct(self):
        return self.flipped / self.base_negative if self.base_negative else 0.0

    def __str__(self):
        # one decimal, truncated rather than rounded
        tenths = math.floor(1000 * self.pct + 1e-9)
        return f"{self.flipped} / {self.base_negative} ({tenths // 10}.{tenths % 10}%)"


def flip_report(basic_pred, corrected_pred, labels):
    """How many unlabelled instances the correction moves from -1 to +1."""
    base, corr, lab = _paired(basic_pred, corrected_pred, labels)
    unl_neg = (lab == -1) & (base == -1)
    return FlipStats(int(np.count_nonzero(unl_neg & (corr == 1))),
                     int(np.count_nonzero(unl_neg)))
