"""Served-model behavior: determinism, gradient report shape, training."""

import math
from pathlib import Path

import pytest
import torch

from typoserver.model import ModelConfig, ServedModel
from typoserver.training import train_model

SERVER = Path(__file__).resolve().parent.parent
REPO = SERVER.parent

torch.set_num_threads(1)


@pytest.fixture(scope="module")
def served():
    return ServedModel.load(SERVER / "data" / "model.pt")


class TestInference:
    def test_probabilities_sum_to_one(self, served):
        probs, label = served.predict("the cast is wretched")
        assert sum(probs) == pytest.approx(1.0)
        assert label == min(range(len(probs)), key=lambda i: -probs[i])

    def test_repeat_calls_identical(self, served):
        a = served.predict("a gem of a film")
        b = served.predict("a gem of a film")
        assert a == b

    def test_grad_report_aligned_with_tokens(self, served):
        tokens, word_index, norms, loss = served.grad_norms(
            "the plot is dismal", 0
        )
        assert len(tokens) == len(word_index) == len(norms)
        assert tokens[0] == "[CLS]" and tokens[-1] == "[SEP]"
        assert word_index[0] == -1 and word_index[-1] == -1
        assert all(n >= 0 and math.isfinite(n) for n in norms)
        assert math.isfinite(loss)

    def test_grad_calls_repeat_identically(self, served):
        first = served.grad_norms("the plot is dismal", 0)
        second = served.grad_norms("the plot is dismal", 0)
        assert first == second

    def test_gold_out_of_range(self, served):
        with pytest.raises(ValueError):
            served.grad_norms("fine", 5)

    def test_checkpoint_metadata(self, served):
        assert served.num_classes == 2
        assert served.train_accuracy == pytest.approx(1.0)
        assert served.checkpoint_name == "model.pt"


class TestCheckpointRoundTrip:
    def test_save_load_preserves_outputs(self, served, tmp_path):
        path = tmp_path / "copy.pt"
        served.save(path)
        again = ServedModel.load(path)
        assert again.predict("the cast is wretched") == served.predict(
            "the cast is wretched"
        )

    def test_garbage_file_rejected(self, tmp_path):
        bad = tmp_path / "bad.pt"
        torch.save({"format": "something-else"}, bad)
        with pytest.raises(ValueError, match="not a server checkpoint"):
            ServedModel.load(bad)

    def test_max_len_capped_by_architecture(self, served, tmp_path):
        path = tmp_path / "copy.pt"
        served.save(path)
        capped = ServedModel.load(path, max_len=4096)
        assert capped.max_len == capped.config.max_len


class TestTraining:
    def test_small_run_learns_separable_toy(self, tmp_path):
        corpus = tmp_path / "toy.tsv"
        rows = []
        for noun in ("film", "plot", "cast", "script", "pacing", "ending"):
            rows.append(f"the {noun} is excellent\t1")
            rows.append(f"the {noun} is dismal\t0")
        corpus.write_text("\n".join(rows) + "\n", encoding="utf-8")
        served = train_model(
            corpus, REPO / "data" / "wordpiece_vocab.txt",
            config=ModelConfig(d_model=32, n_heads=2, n_layers=1, d_ff=64),
            epochs=30, batch_size=4,
        )
        assert served.train_accuracy == 1.0

    def test_same_seed_same_weights(self, tmp_path):
        corpus = tmp_path / "toy.tsv"
        corpus.write_text("good\t1\nbad\t0\n", encoding="utf-8")
        config = ModelConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32)
        a = train_model(corpus, REPO / "data" / "wordpiece_vocab.txt",
                        config=config, epochs=2, seed=3)
        b = train_model(corpus, REPO / "data" / "wordpiece_vocab.txt",
                        config=config, epochs=2, seed=3)
        for pa, pb in zip(a.module.parameters(), b.module.parameters()):
            assert torch.equal(pa, pb)

    def test_label_beyond_config_rejected(self, tmp_path):
        corpus = tmp_path / "toy.tsv"
        corpus.write_text("fine\t5\n", encoding="utf-8")
        with pytest.raises(ValueError, match="classes"):
            train_model(corpus, REPO / "data" / "wordpiece_vocab.txt", epochs=1)
