# Copyright 2026 The embforge Authors
# SPDX-License-Identifier: Apache-2.0

import json
import math
import random

import pytest

import embforge


def test_tokenize():
    assert embforge.tokenize("Hello, World 42") == ["hello", "world", "42"]
    assert embforge.tokenize("ΣΊΣΥΦΟΣ") == ["σίσυφος"]


def test_bm25_hand_case():
    index = embforge.Bm25Index([{"id": "d", "text": "apple apple"}])
    assert len(index) == 1
    assert math.isclose(index.idf("apple"), math.log(4 / 3))
    assert math.isclose(index.score("apple", "d"), math.log(4 / 3) * 4.4 / 3.2)
    assert index.search("apple", 5) == [("d", index.score("apple", "d"))]


def test_bm25_titles_are_indexed():
    index = embforge.Bm25Index([{"id": "a", "title": "Harbor", "text": "boats"}, {"id": "b", "text": "trains"}])
    assert [d for d, _ in index.search("harbor", 5)] == ["a"]


def test_rrf():
    fused = dict(embforge.rrf_fuse([["x", "y"], ["y", "x"], ["x"]]))
    assert abs(fused["x"] - (1 / 61 + 1 / 62 + 1 / 61)) < 1e-12


def test_margin_and_mining():
    assert embforge.margin_threshold(0.8, 0.95) == 0.76
    cands = [("pos", 0.8), ("close", 0.9), ("edge", 0.76)] + [(f"n{i}", 0.5 - i / 100) for i in range(10)]
    for seed in range(50):
        m = embforge.mine_negatives(cands, "pos", top_k=6, num_negatives=3, seed=seed)
        assert len(m["negatives"]) == 3
        for n in m["negatives"]:
            assert n["doc_id"] not in ("pos", "close")
            assert n["score"] <= 0.76
    a = embforge.mine_negatives(cands, "pos", seed=1, query_id="q7")
    b = embforge.mine_negatives(cands, "pos", seed=1, query_id="q7")
    assert a == b
    assert a["seed"] == embforge.query_seed(1, "q7")


def test_losses():
    assert abs(embforge.infonce_loss([0.0], [[0.0]], tau=1.0) - math.log(2)) < 1e-12
    assert abs(embforge.infonce_loss([1.0], [[0.0]], tau=1.0) - math.log1p(math.exp(-1))) < 1e-12
    assert embforge.infonce_gradient([0.0], [[0.0]], tau=1.0) == pytest.approx([-0.5, 0.5])
    kl = embforge.soft_distill_loss([0.0], [[0.0]], [[1.0, 0.0]], tau=1.0, probabilities=True)
    assert abs(kl - math.log(2)) < 1e-12
    rng = random.Random(3)
    for _ in range(20):
        pos = [rng.uniform(-1, 1) for _ in range(3)]
        neg = [[rng.uniform(-1, 1) for _ in range(4)] for _ in range(3)]
        teacher = [[rng.gauss(0, 1) for _ in range(5)] for _ in range(3)]
        for obj in ("infonce", "distill", "blend"):
            assert embforge.grad_check(obj, pos, neg, teacher=teacher) < 1e-4
    with pytest.raises(ValueError):
        embforge.infonce_loss([0.0], [[0.0]], tau=0.0)


def test_borda_and_means():
    rows = [("A", "t1", 61), ("A", "t2", 61), ("A", "t3", 58), ("B", "t1", 100), ("B", "t2", 40), ("B", "t3", 41)]
    scores = [{"model": m, "task": t, "category": "c", "score": s} for m, t, s in rows]
    ranking = embforge.borda_rank(scores)
    assert [(r["model"], r["points"]) for r in ranking] == [("A", 2.0), ("B", 1.0)]
    assert embforge.task_mean(scores, "B") > embforge.task_mean(scores, "A")
    report = embforge.eval_report(scores)
    assert report["tasks"] == 3
    with pytest.raises(embforge.ValidationError):
        embforge.borda_rank(scores[:-1])


def test_leaderboard_row():
    counts = [10, 2, 8, 3, 8, 9, 1]
    means = [66.18, 49.13, 59.25, 88.67, 89.97, 86.69, 38.93]
    assert abs(embforge.recompose_mean(list(zip(means, counts))) - 74.12) <= 0.005


def test_forge():
    sts = embforge.convert_nli([("a", "b", "entailment"), ("c", "d", "neutral"), ("e", "f", "contradiction")])
    assert sts == [("a", "b", 1.0), ("e", "f", 0.0)]
    assert embforge.expand_pairs([("A", ["A1", "A2"], "MSMARCO")]) == [("A", "A1", "MSMARCO"), ("A", "A2", "MSMARCO")]
    recs = [("q", "p", "t"), (" q", "p ", "t"), ("q", "r", "t")]
    once = embforge.dedup(recs)
    assert once == [("q", "p", "t"), ("q", "r", "t")]
    assert embforge.dedup(once) == once
    assert "MSMARCO" in embforge.builtin_tasks()
    prompt = embforge.format_prompt("Do X", "hello", shots=[("q1", "p1")])
    assert prompt == "Instruct: Do X\nQuery: q1\nResponse: p1\n\nInstruct: Do X\nQuery: hello</s>"
    with pytest.raises(embforge.ValidationError):
        embforge.instruction_for("NoSuchTask")


def test_pipeline(mini, tmp_path):
    assert embforge.validate_config(mini / "config.json") == []
    a = embforge.run_mine(mini / "config.json", output_dir=tmp_path / "a")
    b = embforge.run_mine(mini / "config.json", output_dir=tmp_path / "b", workers=4)
    assert a["queries"] == 3 and a["records"] == 4
    for f in ("training_records.jsonl", "mined.jsonl", "teacher_scores.jsonl", "manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config_sha256"] == embforge.config_hash(mini / "config.json")

    cfg = json.loads((mini / "config.json").read_text())
    cfg["mining"]["num_negatives"] = 99
    (mini / "bad.json").write_text(json.dumps(cfg))
    errors = embforge.validate_config(mini / "bad.json")
    assert any(e.startswith("mining.num_negatives") for e in errors)
    with pytest.raises(embforge.ValidationError):
        embforge.run_mine(mini / "bad.json", output_dir=tmp_path / "c")
