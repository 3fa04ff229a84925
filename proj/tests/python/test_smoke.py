import json
import math
import os
import subprocess

import pytest

import anomforge as af


def test_bundled_ontology():
    o = af.load_ontology()
    assert len(o.object_labels) == 48
    assert len(o.scene_names) == 8
    assert len(o.broad_categories) == 10
    assert o.taboo_labels[0] == "person"
    assert not o.is_anomalous("kitchen", "spoon")
    assert o.describe_label("apple").startswith("apple: ")
    for label in o.anomalous_objects("bathroom", "small"):
        assert o.size_class(label) == "small"


def test_accept_rule():
    scores = {"apple": 0.9, "sink": 0.8, "person": 0.1, "human face": 0.2}
    assert af.accept(scores, "apple", 2, ["person", "human face"]) == (True, "")
    assert af.accept(scores, "apple", 4, ["person", "human face"]) == (False, "taboo-in-top-k(person)")
    assert af.accept(scores, "sink", 1, ["person"]) == (False, "target-not-top-k")
    assert af.rank_of({"b": 0.5, "a": 0.5}, "b") == 1
    assert af.ranked_labels({"b": 0.5, "a": 0.5, "c": 0.9}) == ["c", "a", "b"]


def test_detector_functions():
    h = math.sqrt(0.5)
    assert af.irv_scores([1, 0], [[1, 0], [0, 1], [h, h]]) == pytest.approx([1, 0, h])
    assert af.rrv_scores([[1, 0], [1, 0], [0, 1]]) == pytest.approx([2 / 3, 2 / 3, 1 / 3])
    texts = {"da\ndb": [1, 0], "dc\ndb": [0, 1], "db\ndc": [0.6, 0.8]}
    kb = af.kb_scores([[1, 0], [0, 1], [0.6, 0.8]], {"a": [1, 0], "b": [0.8, 0.6], "c": [0, 1]},
                      {"a": "da", "b": "db", "c": "dc"}, 2, texts.__getitem__)
    assert kb == pytest.approx([1.6 / 3, 1.8 / 3, 2.4 / 3])
    z = af.combine(irv=[1, 2, 3], rrv=[5, 5, 5], function_set="visual")
    assert z == pytest.approx([-math.sqrt(1.5) / 2, 0, math.sqrt(1.5) / 2])
    with pytest.raises(af.ValidationError):
        af.combine(irv=[1, 2], function_set="visual")


def test_metrics_and_prompt():
    assert af.word_match("A Fire-Hydrant.", "fire hydrant")
    assert not af.word_match("pineapple", "apple")
    assert af.build_prompt() == af.DEFAULT_VQA_PROMPT
    assert af.build_prompt("what?") == "what?"
    with pytest.raises(af.ValidationError):
        af.build_prompt("  ")


def test_stats(tmp_path):
    manifest = tmp_path / "manifest.jsonl"
    with manifest.open("w") as f:
        for i in range(10):
            f.write(json.dumps({"decision": "accepted" if i < 4 else "rejected"}) + "\n")
    stats = af.manifest_stats(manifest)
    assert stats["generated"] == 10 and stats["accepted"] == 4
    assert stats["acceptance_rate"] == pytest.approx(0.4)
    assert "acceptance rate: 40.0%" in af.format_stats(manifest)
    with pytest.raises(af.IoError):
        af.manifest_stats(tmp_path / "missing.jsonl")


def test_pipeline(tmp_path):
    fx, ds = tmp_path / "fx", tmp_path / "ds"
    assert af.make_fixtures(fx, images_per_scene=1, masks_per_image=1) == (8, 8)
    config = {"generation": {"candidates": 2, "per_pair": 1}}
    assert af.gen(fx, fx / "masks.json", ds, config) == (8, 16)
    assert af.filter_dataset(ds, config) == (16, 16, 16)
    assert af.detect(ds, ds / "det.jsonl", {"detector": {"functions": "visual"}}) == 16
    report = af.evaluate(ds, ds / "report.json", {"eval": {"metric": "broad", "top": 3}})
    assert report["top1_accuracy"] == 1.0
    assert report["top3_accuracy"] >= report["top1_accuracy"]
    assert (ds / "report.confusion.csv").exists()
    det = af.evaluate(ds, ds / "det_report.json", {"eval": {"top": 3}}, detections=ds / "det.jsonl")
    assert det["metric"] == "detector_visual" and det["top1_accuracy"] == 1.0


def test_config_errors_carry_field_paths(tmp_path):
    with pytest.raises(af.ValidationError, match=r"config\.mock\.epsilon: must be >= 0"):
        af.make_fixtures(tmp_path, config={"mock": {"epsilon": -1}})
    with pytest.raises(af.ValidationError, match="unknown key"):
        af.make_fixtures(tmp_path, config={"mokc": {}})


@pytest.mark.skipif("ANOMFORGE_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_usage():
    result = subprocess.run([os.environ["ANOMFORGE_CLI"], "frobnicate"], capture_output=True, text=True)
    assert result.returncode == 1
    assert "usage error" in result.stderr
