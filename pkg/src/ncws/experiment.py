"""Cross-validated comparison of the basic classifier against the corrections.

Every approach is trained on the same folds and the same down-sampled
training rows, so held-out predictions can be paired for McNemar's test.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import downsample_indices, split_folds
from .evaluation import flip_report, mcnemar, prf1, score_histogram
from .features import ReviewFeaturizer
from .losses import BaseLoss, default_penalty_ratio
from .model import PULinearClassifier
from .negativity import make_negativity

logger = logging.getLogger(__name__)

APPROACHES = ("naive", "ncws", "cpu", "pconf", "svmp")
BASELINE = "naive"


@dataclass
class ApproachResult:
    name: str
    predictions: np.ndarray
    squashed: np.ndarray
    fold_metrics: dict = field(default_factory=dict)


@dataclass
class Comparison:
    approaches: dict
    labels: np.ndarray
    truth: Optional[np.ndarray] = None
    assignments: Optional[np.ndarray] = None


def cpu_loss(base):
    # The convex PU risk needs l(z) - l(-z) = -z, which plain hinge violates.
    return BaseLoss.DOUBLE_HINGE if BaseLoss(base) is BaseLoss.HINGE else BaseLoss(base)


def run_comparison(dataset, truth=None, features="all", loss="hinge", folds=5, seed=0,
                   negativity="age", epsilon=1e-3, prior=None, penalty_ratio="auto",
                   max_vocab=10_000, approaches=APPROACHES, train_seed=0, train_params=None):
    """Train every approach on each fold and collect pooled held-out predictions.

    ``seed`` drives the fold split and the per-fold down-sampling,
    ``train_seed`` the mini-batch shuffles. The class prior (``cpu``) and
    penalty ratio (``svmp``) default to the training fold's label counts
    before down-sampling.
    """
    train_params = dict(train_params or {})
    records = dataset.records
    y = dataset.labels
    max_age = int(dataset.ages.max())
    neg_model = make_negativity(negativity, max_age_days=max_age, epsilon=epsilon)
    neg_all = neg_model.fit(records).transform(records)
    split = split_folds(dataset, folds, seed)
    n = len(dataset)
    results = {a: ApproachResult(a, np.zeros(n, dtype=np.int8), np.zeros(n)) for a in approaches}

    for fold, (tr, te) in enumerate(split):
        fz = ReviewFeaturizer(features, max_vocab=max_vocab, max_age_days=max_age,
                              epsilon=epsilon).fit([records[i] for i in tr])
        X_tr = fz.transform([records[i] for i in tr])
        X_te = fz.transform([records[i] for i in te])
        y_tr = y[tr]
        fold_prior = float(np.mean(y_tr == 1)) if prior is None else prior
        fold_ratio = (default_penalty_ratio(y_tr) if penalty_ratio in (None, "auto")
                      else float(penalty_ratio))
        keep = downsample_indices(y_tr, seed=seed * 1000 + fold)
        for name in approaches:
            est = PULinearClassifier(
                risk=name,
                loss=cpu_loss(loss) if name == "cpu" else loss,
                prior=fold_prior if name == "cpu" else None,
                penalty_ratio=fold_ratio if name == "svmp" else None,
                random_state=train_seed * 1000 + fold,
                **train_params,
            )
            est.fit(X_tr[keep], y_tr[keep], negativity=neg_all[tr][keep])
            raw = est.decision_function(X_te)
            res = results[name]
            res.predictions[te] = np.where(raw > 0, 1, -1)
            res.squashed[te] = np.tanh(raw)
            res.fold_metrics[("observed", fold)] = prf1(res.predictions[te], y[te])
            if truth is not None:
                res.fold_metrics[("true", fold)] = prf1(res.predictions[te], truth[te])
        logger.info("fold %d/%d done", fold + 1, folds)
    return Comparison(results, y, truth, split.assignments)


def _mean_metrics(result, which, k):
    rows = [result.fold_metrics[(which, f)] for f in range(k)]
    return {key: float(np.mean([getattr(r, key) for r in rows]))
            for key in ("precision", "recall", "f1")}


def _csv_text(header, rows, config_hash):
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x):
    return f"{x:.6f}"


def render_reports(comp, config_text, config_hash, n_bins=20):
    """Report file name -> contents. Contents depend only on the inputs."""
    names = list(comp.approaches)
    k = int(comp.assignments.max()) + 1
    label_sets = ["observed"] + (["true"] if comp.truth is not None else [])
    ref_truth = comp.truth if comp.truth is not None else comp.labels
    test_labels = "true" if comp.truth is not None else "observed"
    base = comp.approaches.get(BASELINE)

    metric_rows = []
    for name in names:
        res = comp.approaches[name]
        for which in label_sets:
            for fold in range(k):
                m = res.fold_metrics[(which, fold)]
                metric_rows.append([name, which, fold, _fmt(m.precision), _fmt(m.recall),
                                    _fmt(m.f1), m.tp, m.fp, m.fn, m.tn])
            mean = _mean_metrics(res, which, k)
            metric_rows.append([name, which, "mean", _fmt(mean["precision"]),
                                _fmt(mean["recall"]), _fmt(mean["f1"]), "", "", "", ""])

    sig_rows, flip_rows, tests, flips = [], [], {}, {}
    if base is not None:
        for name in names:
            if name == BASELINE:
                continue
            res = comp.approaches[name]
            t = mcnemar(res.predictions, base.predictions, ref_truth)
            tests[name] = t
            sig_rows.append([name, BASELINE, test_labels,
                             t.b, t.c, _fmt(t.statistic), int(t.significant_05)])
            fl = flip_report(base.predictions, res.predictions, comp.labels)
            flips[name] = fl
            flip_rows.append([name, fl.flipped, fl.base_negative, _fmt(fl.pct), str(fl)])

    hist_rows = []
    for name in names:
        h = score_histogram(comp.approaches[name].squashed, n_bins)
        for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts):
            hist_rows.append([name, _fmt(lo), _fmt(hi), int(c)])

    text = io.StringIO()
    text.write(f"config_hash: {config_hash}\n")
    text.write("features standardised per training fold (unit variance; dense columns "
               "also centred)\n\n")
    for which in label_sets:
        text.write(f"Mean over {k} folds, scored against {which} labels "
                   f"(* = McNemar p<0.05 vs {BASELINE})\n")
        text.write(f"{'approach':<10}{'precision':>11}{'recall':>9}{'f1':>9}\n")
        for name in names:
            mean = _mean_metrics(comp.approaches[name], which, k)
            star = "*" if which == test_labels and name in tests and tests[name].significant_05 else " "
            text.write(f"{name:<10}{mean['precision']:>11.4f}{mean['recall']:>9.4f}"
                       f"{mean['f1']:>8.4f}{star}\n")
        text.write("\n")
    if flips:
        text.write(f"Unlabelled instances moved from negative ({BASELINE}) to positive\n")
        for name, fl in flips.items():
            text.write(f"{name:<10}{fl}\n")

    return {
        "config.txt": config_text,
        "metrics.csv": _csv_text(["approach", "labels", "fold", "precision", "recall", "f1",
                                  "tp", "fp", "fn", "tn"], metric_rows, config_hash),
        "mcnemar.csv": _csv_text(["approach", "reference", "labels", "b", "c", "statistic",
                                  "significant_05"], sig_rows, config_hash),
        "flips.csv": _csv_text(["approach", "flipped", "base_negative", "pct", "summary"],
                               flip_rows, config_hash),
        "histograms.csv": _csv_text(["approach", "bin_lo", "bin_hi", "count"], hist_rows,
                                    config_hash),
        "report.txt": text.getvalue(),
    }


def write_reports(files, output_dir):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out / name).write_text(content, encoding="utf-8")
    return out
