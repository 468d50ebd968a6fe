"""The attack toolkit's own client driving a real server subprocess."""

import sys
from pathlib import Path

import pytest
import torch

from typoattack.remote import RemoteVictim, VictimEndpoint

from typoserver.model import ServedModel

SERVER = Path(__file__).resolve().parent.parent
CHECKPOINT = SERVER / "data" / "model.pt"

torch.set_num_threads(1)


@pytest.fixture(scope="module")
def victim():
    endpoint = VictimEndpoint(
        "stdio-subprocess",
        argv=(sys.executable, "-m", "typoserver.cli", str(CHECKPOINT)),
        timeout_ms=30_000,
    )
    v = RemoteVictim.connect(endpoint)
    yield v
    v.close()


@pytest.fixture(scope="module")
def local():
    return ServedModel.load(CHECKPOINT)


class TestHandshakeCapabilities:
    def test_advertises_protocol_and_gradients(self, victim):
        caps = victim.handshake()
        assert caps.version == 1
        assert caps.num_classes == 2
        assert caps.supports_gradients is True
        assert caps.tokenizer_id.startswith("wordpiece-uncased-")


class TestServedPredictions:
    def test_matches_in_process_model(self, victim, local):
        for text in (
            "a gem of a film with excellent pacing",
            "the cast is wretched",
            "robustness",
        ):
            probs, label = local.predict(text)
            remote = victim.predict(text)
            assert remote.label == label
            # wire floats are rounded to 8 significant digits
            assert remote.probs == pytest.approx(probs, abs=1e-6)


class TestServedGradients:
    def test_robustness_pieces_map_to_one_word(self, victim):
        view = victim.saliency_view("robustness", 0)
        # [CLS]/[SEP] dropped by the client; both pieces belong to word 0
        assert view.component_word == (0, 0)
        assert len(view.norms) == 2

    def test_norm_count_matches_served_tokens(self, victim, local):
        text = "the plot is dismal and the cast is wretched"
        tokens, _, _, _ = local.grad_norms(text, 0)
        report = victim.grad_norms(text, 0)
        assert len(report.component_norms) == len(tokens)

    def test_gold_out_of_range_rejected_client_side(self, victim):
        with pytest.raises(ValueError):
            victim.grad_norms("fine", 9)

    def test_single_word_view(self, victim):
        view = victim.saliency_view("fine", 0)
        # however the vocab splits it, every piece belongs to word 0
        assert set(view.component_word) == {0}

    def test_empty_text_view_has_no_words(self, victim):
        view = victim.saliency_view("", 0)
        assert view.component_word == ()
