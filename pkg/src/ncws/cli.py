"""Command-line entry point: ``ncws <subcommand> [flags]``."""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .config import ExperimentConfig
from .data import apply_threshold, downsample_indices, load_reviews, summary_line, write_reviews
from .evaluation import age_helpfulness_curve, curve_correlations, prf1, score_histogram
from .experiment import cpu_loss, render_reports, run_comparison, write_reports
from .features import ReviewFeaturizer, featurizer_from_dict, featurizer_to_dict
from .losses import default_penalty_ratio
from .model import PULinearClassifier, load_model, save_model
from .negativity import make_negativity
from .synth import SynthConfig, generate, read_truth, write_truth

logger = logging.getLogger("ncws")

# flag -> (config key, argparse kwargs)
FLAGS = {
    "--input": ("data.input", {}),
    "--format": ("data.format", {"choices": ["jsonl", "csv"]}),
    "--truth": ("data.truth", {"help": "CSV id,true_label sidecar (synthetic data)"}),
    "--threshold": ("data.threshold", {"type": int}),
    "--folds": ("data.folds", {"type": int}),
    "--seed": ("data.seed", {"type": int}),
    "--features": ("features.selector", {}),
    "--max-vocab": ("features.max_vocab", {"type": int}),
    "--risk": ("risk.assembly", {"choices": ["naive", "ncws", "cpu", "pconf", "svmp"]}),
    "--loss": ("risk.loss", {"choices": ["hinge", "double-hinge", "logistic"]}),
    "--prior": ("risk.prior", {"type": float}),
    "--penalty-ratio": ("risk.penalty_ratio", {"help": "float or 'auto'"}),
    "--negativity": ("risk.negativity", {"help": "age | constant:<v> | file:<path>"}),
    "--epsilon": ("risk.epsilon", {"type": float}),
    "--lr": ("train.lr", {"type": float}),
    "--epochs": ("train.epochs", {"type": int}),
    "--batch-size": ("train.batch_size", {"type": int}),
    "--l2": ("train.l2", {"type": float}),
    "--train-seed": ("train.seed", {"type": int}),
    "--output-dir": ("eval.output_dir", {}),
    "--bins": ("eval.bins", {"type": int}),
    "--bin-width": ("eval.bin_width", {"type": int}),
    "--n": ("synth.n", {"type": int}),
    "--pos-frac": ("synth.pos_frac", {"type": float}),
    "--max-age": ("synth.max_age", {"type": int}),
    "--exposure": ("synth.exposure", {"help": "linear | logistic | step:<age>"}),
    "--noise": ("synth.noise", {"type": float}),
}

DATA = ["--input", "--format", "--threshold"]
MODEL = ["--features", "--max-vocab", "--risk", "--loss", "--prior", "--penalty-ratio",
         "--negativity", "--epsilon", "--lr", "--epochs", "--batch-size", "--l2", "--train-seed"]

SUBCOMMANDS = {
    "ingest": (DATA, "Load a review file and print its summary line"),
    "synth": (["--n", "--pos-frac", "--max-age", "--exposure", "--noise", "--seed"],
              "Generate a synthetic PU review corpus"),
    "featurize": (DATA + ["--features", "--max-vocab", "--epsilon"],
                  "Write the feature matrix of a review file"),
    "train": (DATA + ["--seed"] + MODEL, "Train one classifier on a whole review file"),
    "evaluate": (DATA + ["--truth", "--bins"], "Score a saved model on a review file"),
    "compare": (DATA + ["--truth", "--folds", "--seed"] + MODEL + ["--output-dir", "--bins"],
                "Cross-validate the basic classifier against every correction"),
    "correlate": (DATA + ["--bin-width"], "Correlate review age with helpfulness"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="ncws", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (flags, help_text) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key=value config file (section.key = value)")
        p.add_argument("-v", "--verbose", action="store_true")
        for flag in flags:
            key, kwargs = FLAGS[flag]
            p.add_argument(flag, dest=key, default=None, **kwargs)
        if name in ("synth", "featurize", "evaluate"):
            p.add_argument("--output", required=name == "synth" or name == "featurize",
                           help="output file")
        if name == "synth":
            p.add_argument("--truth-output", help="truth sidecar (default: <output>.truth.csv)")
        if name == "train":
            p.add_argument("--save-model", required=True, help="model JSON path")
        if name == "evaluate":
            p.add_argument("--load-model", required=True, help="model JSON path")
    return parser


def resolve_config(args):
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    for key, value in vars(args).items():
        if "." in key and value is not None:
            cfg.set(key, value)
    return cfg


def _load_dataset(cfg):
    if not cfg.data.input:
        raise ValueError("--input is required")
    loaded = load_reviews(cfg.data.input, cfg.data.format)
    if loaded.skipped:
        logger.warning("skipped %d malformed line(s) in %s", loaded.skipped, cfg.data.input)
    return apply_threshold(loaded.records, cfg.data.threshold)


def _load_truth(cfg, dataset):
    if not cfg.data.truth:
        return None
    table = read_truth(cfg.data.truth)
    missing = [i for i in dataset.ids if i not in table]
    if missing:
        raise ValueError(f"truth file lacks {len(missing)} id(s), e.g. {missing[0]!r}")
    return np.array([table[i] for i in dataset.ids], dtype=np.int8)


def _penalty_ratio(cfg, labels):
    value = cfg.risk.penalty_ratio
    return default_penalty_ratio(labels) if value in ("auto", "", None) else float(value)


def _train_params(cfg):
    return {"learning_rate": cfg.train.lr, "epochs": cfg.train.epochs,
            "batch_size": cfg.train.batch_size, "l2_lambda": cfg.train.l2}


def cmd_ingest(cfg, args):
    dataset = _load_dataset(cfg)
    print(summary_line(Path(cfg.data.input).stem, dataset))
    print(f"positive={dataset.n_positive} unlabelled={dataset.n_unlabelled}")


def cmd_synth(cfg, args):
    s = cfg.synth
    dataset, truth = generate(SynthConfig(n_instances=s.n, positive_fraction=s.pos_frac,
                                          max_age_days=s.max_age, exposure=s.exposure,
                                          feature_noise=s.noise, seed=cfg.data.seed))
    write_reviews(dataset.records, args.output)
    truth_path = args.truth_output or f"{args.output}.truth.csv"
    write_truth(dataset.ids, truth, truth_path)
    Path(f"{args.output}.config").write_text(cfg.to_text(), encoding="utf-8")
    print(summary_line("synthetic", dataset))
    print(f"true positive fraction {np.mean(truth == 1):.4f}; truth -> {truth_path}")


def cmd_featurize(cfg, args):
    dataset = _load_dataset(cfg)
    fz = ReviewFeaturizer(cfg.features.selector, max_vocab=cfg.features.max_vocab,
                          epsilon=cfg.risk.epsilon).fit(dataset.records)
    X = fz.transform(dataset.records)
    names = list(fz.get_feature_names_out())
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if sp.issparse(X):
            coo = X.tocoo()
            fh.write(f"# sparse triplets shape={X.shape[0]},{X.shape[1]}\n")
            writer.writerow(["row", "col", "value"])
            order = np.lexsort((coo.col, coo.row))
            writer.writerows((int(coo.row[i]), int(coo.col[i]), repr(float(coo.data[i])))
                             for i in order)
            Path(f"{args.output}.columns").write_text("\n".join(names) + "\n", encoding="utf-8")
        else:
            writer.writerow(["id"] + names)
            for rid, row in zip(dataset.ids, X):
                writer.writerow([rid] + [repr(float(v)) for v in row])
    Path(f"{args.output}.config").write_text(cfg.to_text(), encoding="utf-8")
    print(f"wrote {X.shape[0]}x{X.shape[1]} feature matrix to {args.output}")


def cmd_train(cfg, args):
    dataset = _load_dataset(cfg)
    records, y = dataset.records, dataset.labels
    fz = ReviewFeaturizer(cfg.features.selector, max_vocab=cfg.features.max_vocab,
                          epsilon=cfg.risk.epsilon).fit(records)
    X = fz.transform(records)
    neg = make_negativity(cfg.risk.negativity, max_age_days=fz.max_age_,
                          epsilon=cfg.risk.epsilon).fit(records).transform(records)
    risk = cfg.risk.assembly
    prior = cfg.risk.prior
    if risk == "cpu" and prior is None:
        prior = float(np.mean(y == 1))
    keep = downsample_indices(y, seed=cfg.data.seed)
    est = PULinearClassifier(
        risk=risk, loss=cpu_loss(cfg.risk.loss) if risk == "cpu" else cfg.risk.loss,
        prior=prior if risk == "cpu" else None,
        penalty_ratio=_penalty_ratio(cfg, y) if risk == "svmp" else None,
        random_state=cfg.train.seed, **_train_params(cfg),
    ).fit(X[keep], y[keep], negativity=neg[keep])
    save_model(est, args.save_model, extra={
        "featurizer": featurizer_to_dict(fz),
        "config": dict(cfg.items()),
        "config_hash": cfg.digest(),
    })
    print(f"trained {risk} on {len(keep)} rows ({fz.get_feature_names_out().size} features); "
          f"objective {est.objective_history_[0]:.6f} -> {est.objective_history_[-1]:.6f}")


def cmd_evaluate(cfg, args):
    dataset = _load_dataset(cfg)
    est, data = load_model(args.load_model)
    fz = featurizer_from_dict(data["featurizer"])
    raw = est.decision_function(fz.transform(dataset.records))
    pred = np.where(raw > 0, 1, -1)
    lines = [f"config_hash: {cfg.digest()}", f"model: {args.load_model}"]
    targets = [("observed", dataset.labels)]
    truth = _load_truth(cfg, dataset)
    if truth is not None:
        targets.append(("true", truth))
    for name, labels in targets:
        m = prf1(pred, labels)
        lines.append(f"{name:<9} precision={m.precision:.4f} recall={m.recall:.4f} "
                     f"f1={m.f1:.4f} tp={m.tp} fp={m.fp} fn={m.fn} tn={m.tn}")
    hist = score_histogram(np.tanh(raw), cfg.eval.bins)
    lines.append("histogram " + " ".join(str(int(c)) for c in hist.counts))
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_compare(cfg, args):
    dataset = _load_dataset(cfg)
    truth = _load_truth(cfg, dataset)
    comp = run_comparison(
        dataset, truth, features=cfg.features.selector, loss=cfg.risk.loss,
        folds=cfg.data.folds, seed=cfg.data.seed, negativity=cfg.risk.negativity,
        epsilon=cfg.risk.epsilon, prior=cfg.risk.prior, penalty_ratio=cfg.risk.penalty_ratio,
        max_vocab=cfg.features.max_vocab, train_seed=cfg.train.seed,
        train_params=_train_params(cfg),
    )
    files = render_reports(comp, cfg.to_text(), cfg.digest(), cfg.eval.bins)
    out = write_reports(files, cfg.eval.output_dir)
    sys.stdout.write(files["report.txt"])
    print(f"reports written to {out}")


def cmd_correlate(cfg, args):
    dataset = _load_dataset(cfg)
    curve = age_helpfulness_curve(dataset, cfg.eval.bin_width)
    pearson, spearman = curve_correlations(curve)
    print(f"bins={len(curve)} bin_width={cfg.eval.bin_width}")
    print(f"pearson={pearson:.6f} spearman={spearman:.6f}")


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "correlate": cmd_correlate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"ncws {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
