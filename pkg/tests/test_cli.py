import json
import os

import numpy as np
import pytest

from kgsumm.cli import main
from kgsumm.config import ConfigError, PipelineConfig, load_config
from kgsumm.corpus import Corpus, write_jsonl
from kgsumm.relation_model import save_pairs
from kgsumm.rstree import deserialize
from kgsumm.synthetic import e2e_corpus, e2e_embeddings, pair_corpus, write_workspace

from conftest import doc_from_text


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    root = tmp_path_factory.mktemp("ws")
    corpus = e2e_corpus(n_docs=4)
    cfg = write_workspace(str(root), corpus, e2e_embeddings(corpus), "finance", ptt_threshold=0.4)
    assert main(["build-dkb", "--config", cfg]) == 0
    return root, cfg


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def test_build_dkb_smoke_and_determinism(ws, capsys):
    root, cfg = ws
    path = os.path.join(root, "dkb", "finance.json")
    first = _read(path)
    assert main(["build-dkb", "--config", cfg]) == 0
    assert _read(path) == first
    err = capsys.readouterr().err
    assert "finance" in err and "A" in err
    manifest = json.loads(_read(os.path.join(root, "out", "manifest_build-dkb.json")))
    assert manifest["config_sha256"] and "torch" in manifest["versions"]


def test_missing_embeddings_exit_2(ws, tmp_path):
    _, cfg = ws
    assert main(["build-dkb", "--config", cfg, "--embeddings", str(tmp_path / "nope.txt"), "--output-dir", str(tmp_path)]) == 2


def test_budget_flags_exclusive(ws):
    _, cfg = ws
    assert main(["summarize", "--config", cfg, "--words", "10", "--ratio", "0.1"]) == 2


def test_summarize_ratio_and_words(ws):
    root, cfg = ws
    assert main(["summarize", "--config", cfg, "--doc-id", "e2e0", "--ratio", "0.10"]) == 0
    rec = json.loads(_read(os.path.join(root, "out", "summaries", "e2e0__ours__10_.json")))
    edus = json.loads(_read(_edus_file(root, cfg, "e2e0")))
    lengths = [len(e["tokens"]) for e in edus]
    target = int(0.1 * sum(lengths))
    assert rec["word_count"] - lengths[rec["selection_order"][-1]] < target
    assert rec["output_order"] == sorted(rec["selection_order"])
    assert main(["summarize", "--config", cfg, "--doc-id", "e2e0", "--words", "100", "--system", "lead"]) == 0
    rec = json.loads(_read(os.path.join(root, "out", "summaries", "e2e0__lead__100.json")))
    assert rec["word_count"] >= 100 and rec["system"] == "lead"


def _edus_file(root, cfg, doc_id):
    assert main(["segment", "--config", cfg, "--doc-id", doc_id]) == 0
    return os.path.join(root, "out", "edus", f"{doc_id}.json")


def test_evaluate_report_shape(ws, tmp_path):
    _, cfg = ws
    out = str(tmp_path / "ev")
    assert main(["evaluate", "--config", cfg, "--output-dir", out]) == 0
    report = json.loads(_read(os.path.join(out, "report_finance.json")))
    assert list(report["rows"]) == ["Lead", "TextRank", "Ours"]
    assert report["columns"] == ["10%", "20%", "50", "100"]
    assert all(v is not None for row in report["rows"].values() for v in row.values())
    assert report["fitted_params"] is False


def test_evaluate_identical_summaries_identical_scores(ws, tmp_path):
    root, cfg = ws
    assert main(["summarize", "--config", cfg, "--doc-id", "e2e1", "--words", "50", "--system", "lead"]) == 0
    rec = json.loads(_read(os.path.join(root, "out", "summaries", "e2e1__lead__50.json")))
    twin = dict(rec, system="textrank")
    path = tmp_path / "s.jsonl"
    path.write_text(json.dumps(rec) + "\n" + json.dumps(twin) + "\n")
    out = str(tmp_path / "ev")
    args = ["evaluate", "--config", cfg, "--output-dir", out, "--summaries", str(path), "--systems", "lead,textrank", "--budgets", "50"]
    assert main(args) == 0
    rows = json.loads(_read(os.path.join(out, "report_finance.json")))["rows"]
    assert rows["Lead"]["50"] == rows["TextRank"]["50"]


def test_parse_single_edu_doc(ws, tmp_path):
    root, cfg = ws
    doc = doc_from_text("one", [["acme rate rise ."]], domain="finance")
    path = tmp_path / "one.jsonl"
    write_jsonl([doc], path)
    assert main(["parse", "--config", cfg, "--document", str(path), "--output-dir", str(tmp_path)]) == 0
    tree = deserialize(_read(tmp_path / "trees" / "one.json"))
    assert tree.root.is_leaf and len(tree.edus) == 1


def test_fit_metric_recovers_planted(ws, tmp_path):
    _, cfg = ws
    rng = np.random.default_rng(0)
    w, b = np.array([1.0, -2.0, 3.0, -4.0, 5.0, 6.0]), 7.0
    X = rng.random((20, 6))
    path = tmp_path / "train.jsonl"
    path.write_text("".join(json.dumps({"features": x.tolist(), "target": float(x @ w + b)}) + "\n" for x in X))
    assert main(["fit-metric", "--config", cfg, "--training", str(path), "--output-dir", str(tmp_path)]) == 0
    params = json.loads(_read(tmp_path / "metric_params.json"))
    assert np.allclose(params["w"], w, atol=1e-6) and abs(params["b"] - b) < 1e-6 and params["fitted"]


def test_stats_counts(tmp_path):
    docs = [doc_from_text("a", [["x y .", "z ."]]), doc_from_text("b", [["p q ."]])]
    write_jsonl(Corpus(docs), tmp_path / "c.jsonl")
    assert main(["stats", "--corpus", str(tmp_path / "c.jsonl"), "--domain", "d", "--output-dir", str(tmp_path)]) == 0
    stats = json.loads(_read(tmp_path / "stats_d.json"))
    assert stats == {"domain": "d", "doc_count": 2, "avg_sentences": 1.5, "avg_words": 4.0}


def test_train_command(tmp_path):
    save_pairs(pair_corpus(10, seed=0), tmp_path / "p.jsonl")
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pairs": str(tmp_path / "p.jsonl"), "emb_dim": 4, "hidden": 4, "epochs": 1, "batch_size": 5, "max_decode_len": 4, "output_dir": str(tmp_path)}))
    assert main(["train", "--config", str(cfg)]) == 0
    assert main(["train", "--config", str(cfg), "--model", str(tmp_path / "m2.json")]) == 0
    assert _read(tmp_path / "model.json") == _read(tmp_path / "m2.json")


def test_unknown_domain_is_runtime_error(ws):
    _, cfg = ws
    assert main(["stats", "--config", cfg, "--domain", "nope"]) == 1


def test_config_precedence_and_validation(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 3, "d": 0.5}))
    cfg = load_config(str(path), {"seed": 9, "d": None})
    assert cfg.seed == 9 and cfg.d == 0.5 and cfg.window == PipelineConfig().window
    path.write_text(json.dumps({"nonsense": 1}))
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text(json.dumps({"d": 1.5}))
    with pytest.raises(ConfigError):
        load_config(str(path))
    assert main(["stats", "--config", str(path)]) == 2
