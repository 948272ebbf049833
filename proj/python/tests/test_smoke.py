import math
import os

import pytest

import sce_core


def test_flops_presets_and_epoch_totals():
    names = sce_core.flops.preset_names()
    assert "llama-3.2-1b-lora-r180" in names
    assert "roberta-sce" in names

    llama = sce_core.flops.coefficients("llama-3.2-1b-lora-r180", "train-model")
    assert llama["m"] == 2554462208
    assert llama["m^2"] == 196608

    sce_model = sce_core.flops.coefficients("roberta-sce", "train-model")
    assert sce_model["m"] == 254803968
    assert sce_model["m^2"] == 55296
    assert sce_model["const"] == 2359296

    jina = sce_core.flops.coefficients("jina-v3", "infer-model")
    assert jina["m"] == 301989888
    assert jina["m^2"] == 49152

    total = sce_core.flops.epoch_cost("llama-3.2-1b-lora-r180", 225, 16000, "train")
    assert total == 9355316428800000
    oneoff = sce_core.flops.epoch_cost("jina-v3", 84.17, 16000, "infer")
    assert abs(oneoff - 4.12e14) / 4.12e14 < 0.005


def test_kernels():
    probs = sce_core.softmax([0.0, math.log(3.0)])
    assert probs[0] == pytest.approx(0.25, abs=1e-12)
    assert probs[1] == pytest.approx(0.75, abs=1e-12)
    assert sum(sce_core.softmax(list(range(20)))) == pytest.approx(1.0, abs=1e-12)

    assert sce_core.gelu([0.0]) == [0.0]
    assert sce_core.cross_entropy([0.25] * 4, [0, 1, 0, 0]) == pytest.approx(math.log(4))


def test_embedding_determinism():
    a = sce_core.embed_text("the quick brown fox", dim=16, seed=3)
    b = sce_core.embed_text("the quick brown fox", dim=16, seed=3)
    assert a == b
    assert math.sqrt(sum(x * x for x in a)) == pytest.approx(1.0, abs=1e-12)
    assert sce_core.embed_text("fox", dim=16, seed=4) != a


def test_baselines():
    idx, probs = sce_core.subset_softmax([0.0, math.log(2.0), 9.0], [0, 1])
    assert idx == 1
    assert probs[0] == pytest.approx(1 / 3, abs=1e-12)

    idx, probs = sce_core.cosine_classify([1.0, 0.0], [[2.0, 0.0], [0.0, 1.0]], "dot")
    assert idx == 0

    prompt = sce_core.render_prompt("a snippet", ["sport", "music"])
    assert "a snippet" in prompt
    assert "sport, music" in prompt
    assert "{text_excerpt}" not in prompt


def test_end_to_end_pipeline(tmp_path):
    spec = tmp_path / "spec.txt"
    spec.write_text(
        "texts_per_topic=6\n"
        "test_texts_per_topic=3\n"
        "words_per_text=10\n"
        "keyword_rate=0.8\n"
        "noise_vocab_size=8\n"
        "unseen_topics=2\n"
        "k_min=2\nk_max=3\nseed=1\n"
        "[topics]\n"
        "sport: ball team | game\n"
        "music: song band | tune\n"
        "food: bread soup | meal\n"
        "travel: plane hotel | trip\n"
        "science: atom laser | physics\n"
    )
    n_train, n_seen, n_unseen = sce_core.gen_corpus(str(spec), str(tmp_path))
    assert n_train > 0 and n_seen > 0 and n_unseen > 0

    ckpt = tmp_path / "model.ckpt"
    history = sce_core.train_file(
        str(tmp_path / "train.jsonl"),
        str(ckpt),
        vocab_from=[str(tmp_path / "seen_test.jsonl"), str(tmp_path / "unseen_test.jsonl")],
        epochs=5,
        dim=16,
        heads=2,
        ffn_dim=32,
        layers=1,
        query_dim=16,
    )
    assert len(history) == 5
    assert history[-1]["loss"] <= history[0]["loss"]

    result = sce_core.classify_file(str(ckpt), "ball team ball", ["sport"])
    assert result["label"] == "sport"
    assert result["probs"]["sport"] == 1.0

    acc = sce_core.eval_file(str(ckpt), str(tmp_path / "train.jsonl"))
    assert 0.0 <= acc <= 1.0
