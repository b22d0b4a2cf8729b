import json

import pytest

from ncws.cli import main
from ncws.config import ExperimentConfig


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    data = d / "data.jsonl"
    assert main(["synth", "--n", "600", "--seed", "2", "--output", str(data)]) == 0
    return d, data


def test_synth_outputs(corpus, capsys):
    d, data = corpus
    assert data.exists() and (d / "data.jsonl.truth.csv").exists()
    assert "synth.n = 600" in (d / "data.jsonl.config").read_text()
    first = json.loads(data.read_text().splitlines()[0])
    assert {"id", "text", "age_days", "helpful_votes"} <= set(first)


def test_ingest_and_correlate(corpus, capsys):
    _, data = corpus
    assert main(["ingest", "--input", str(data)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("data: 600 reviews, ")
    assert main(["correlate", "--input", str(data), "--bin-width", "100"]) == 0
    line = capsys.readouterr().out.splitlines()[1]
    assert line.startswith("pearson=") and "spearman=" in line


@pytest.mark.parametrize("selector, sparse", [("structural", False), ("all", True)])
def test_featurize(corpus, tmp_path, selector, sparse):
    _, data = corpus
    out = tmp_path / "X.csv"
    assert main(["featurize", "--input", str(data), "--features", selector,
                 "--max-vocab", "20", "--output", str(out)]) == 0
    head = out.read_text().splitlines()[0]
    if sparse:
        assert head.startswith("# sparse triplets shape=600,")
        assert (tmp_path / "X.csv.columns").read_text().startswith("len\nnos\n")
    else:
        assert head == "id,len,nos,asl,poqs"


def test_train_then_evaluate(corpus, tmp_path, capsys):
    d, data = corpus
    model = tmp_path / "m.json"
    assert main(["train", "--input", str(data), "--features", "dense", "--risk", "ncws",
                 "--lr", "0.01", "--save-model", str(model)]) == 0
    saved = json.loads(model.read_text())
    assert saved["config"]["risk.assembly"] == "ncws" and "featurizer" in saved
    report = tmp_path / "eval.txt"
    assert main(["evaluate", "--input", str(data), "--load-model", str(model),
                 "--truth", str(d / "data.jsonl.truth.csv"), "--output", str(report)]) == 0
    text = report.read_text()
    assert "observed" in text and "\ntrue " in text and "histogram" in text


def test_compare_is_byte_identical(corpus, tmp_path, capsys):
    d, data = corpus
    runs = []
    out = tmp_path / "reports"
    for _ in range(2):
        assert main(["compare", "--input", str(data), "--truth", str(d / "data.jsonl.truth.csv"),
                     "--features", "dense", "--folds", "3", "--lr", "0.01",
                     "--output-dir", str(out)]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        for p in out.iterdir():
            p.unlink()
    assert runs[0] == runs[1]
    assert set(runs[0]) == {"config.txt", "metrics.csv", "mcnemar.csv", "flips.csv",
                            "histograms.csv", "report.txt"}
    digest = ExperimentConfig.from_text(runs[0]["config.txt"].decode()).digest()
    for name, blob in runs[0].items():
        if name.endswith(".csv"):
            assert blob.decode().startswith(f"# config_hash={digest}\n")
    metrics = runs[0]["metrics.csv"].decode()
    for approach in ("naive", "ncws", "cpu", "pconf", "svmp"):
        assert f"\n{approach},true,mean," in metrics


def test_config_file(corpus, tmp_path, capsys):
    _, data = corpus
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(f"# comment\ndata.input = {data}\neval.bin_width = 250\n")
    assert main(["correlate", "--config", str(cfg)]) == 0
    assert "bin_width=250" in capsys.readouterr().out
    cfg.write_text("data.nonsense = 1\n")
    assert main(["correlate", "--config", str(cfg)]) == 1
    assert "unknown config key" in capsys.readouterr().err


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["compare", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    assert main(["ingest", "--input", str(tmp_path / "missing.jsonl")]) == 1
    assert main(["ingest"]) == 1


def test_config_roundtrip_and_validation():
    cfg = ExperimentConfig()
    cfg.set("train.lr", "0.5")
    cfg.set("risk.prior", "")
    assert cfg.train.lr == 0.5 and cfg.risk.prior is None
    again = ExperimentConfig.from_text(cfg.to_text())
    assert again == cfg and again.digest() == cfg.digest()
    assert ExperimentConfig().digest() != cfg.digest()
    for bad in ("train.nope", "nosection.lr", "lr"):
        with pytest.raises(ValueError):
            cfg.set(bad, "1")
    with pytest.raises(ValueError):
        cfg.set("train.epochs", "ten")
    with pytest.raises(ValueError):
        ExperimentConfig.from_text("train.lr 0.1\n")
