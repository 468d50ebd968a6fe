"""Splitting, greedy subword segmentation, and span bookkeeping."""

import string
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from typoattack.errors import DataError
from typoattack.wordpiece import (
    Vocab,
    backtrack_to_word,
    fragmentation,
    load_vocab,
    pretokenize,
    tokenize,
    tokenize_word,
    vocab_from_tokens,
)

DATA = Path(__file__).resolve().parents[1] / "data"

BASE_TOKENS = (
    ["[UNK]", "!", ".", "'"]
    + list(string.ascii_lowercase)
    + ["##" + c for c in string.ascii_lowercase]
)


@pytest.fixture(scope="module")
def vocab():
    return vocab_from_tokens(
        BASE_TOKENS + ["the", "un", "##able", "robust", "##ness", "oh"]
    )


@pytest.fixture(scope="module")
def shipped():
    return load_vocab(DATA / "wordpiece_vocab.txt")


sentences = st.text(
    alphabet=st.sampled_from("abcdefghijklmnopqrstuvwxyz!.' "), max_size=40
)


class TestVocabLoading:
    def test_ids_are_line_numbers(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("\n".join(BASE_TOKENS) + "\n", encoding="utf-8")
        v = load_vocab(path)
        assert v.id_of("[UNK]") == 0
        assert v.id_of("!") == 1
        assert len(v) == len(BASE_TOKENS)

    def test_duplicate_token_rejected(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("\n".join(BASE_TOKENS + ["the", "the"]), encoding="utf-8")
        with pytest.raises(DataError, match="duplicate"):
            load_vocab(path)

    def test_missing_unknown_token_rejected(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("\n".join(BASE_TOKENS[1:]), encoding="utf-8")
        with pytest.raises(DataError, match="unknown token"):
            load_vocab(path)

    def test_missing_letter_fallback_rejected(self):
        with pytest.raises(DataError, match="fallback"):
            vocab_from_tokens(["[UNK]", "a", "##a"])

    def test_empty_line_rejected(self):
        with pytest.raises(DataError, match="empty token"):
            vocab_from_tokens(BASE_TOKENS[:1] + [""] + BASE_TOKENS[1:])


class TestPretokenize:
    def test_punctuation_becomes_standalone_words(self):
        words = pretokenize("oh! fine")
        assert [w.text for w in words] == ["oh", "!", "fine"]
        assert [(w.char_start, w.char_end) for w in words] == [(0, 2), (2, 3), (4, 8)]

    def test_interior_punctuation_splits(self):
        assert [w.text for w in pretokenize("don't stop")] == ["don", "'", "t", "stop"]

    def test_empty_and_blank(self):
        assert pretokenize("") == []
        assert pretokenize("   \t ") == []

    @given(sentences)
    def test_spans_slice_back_to_the_text(self, text):
        for word in pretokenize(text):
            assert text[word.char_start : word.char_end] == word.text
            assert word.char_start < word.char_end
            assert " " not in word.text


class TestTokenize:
    def test_greedy_longest_prefix(self, vocab):
        assert tokenize_word("unable", vocab) == ["un", "##able"]

    def test_continuations_marked(self, vocab):
        assert tokenize_word("robustness", vocab) == ["robust", "##ness"]

    def test_unmatched_and_nonascii_words_become_unknown(self, vocab):
        assert tokenize_word("café", vocab) == ["[UNK]"]
        assert tokenize_word("a" * 101, vocab) == ["[UNK]"]

    def test_lowercased_before_matching(self, vocab):
        seg = tokenize("Robustness", vocab)
        assert [c.token for c in seg.components] == ["robust", "##ness"]
        assert (seg.components[0].char_start, seg.components[0].char_end) == (0, 6)
        assert (seg.components[1].char_start, seg.components[1].char_end) == (6, 10)

    def test_punctuation_words_tokenize_alone(self, vocab):
        seg = tokenize("oh!", vocab)
        assert [c.token for c in seg.components] == ["oh", "!"]
        assert [c.word_index for c in seg.components] == [0, 1]

    def test_unknown_component_spans_whole_word(self, vocab):
        seg = tokenize("see café now", vocab)
        unk = seg.components[[c.token for c in seg.components].index("[UNK]")]
        word = seg.words[unk.word_index]
        assert (unk.char_start, unk.char_end) == (word.char_start, word.char_end)

    @given(text=sentences)
    def test_span_invariants(self, text, vocab):
        seg = tokenize(text, vocab)
        starts = [c.char_start for c in seg.components]
        assert starts == sorted(starts)
        for comp in seg.components:
            word = seg.words[comp.word_index]
            assert word.char_start <= comp.char_start <= comp.char_end <= word.char_end

    @given(text=sentences)
    def test_round_trip_per_word(self, text, vocab):
        seg = tokenize(text, vocab)
        by_word: dict[int, list[str]] = {}
        for comp in seg.components:
            by_word.setdefault(comp.word_index, []).append(comp.token)
        for wi, tokens in by_word.items():
            if tokens == ["[UNK]"]:
                continue
            rebuilt = "".join(t.removeprefix("##") for t in tokens)
            assert rebuilt == seg.words[wi].text.lower()

    @given(word=st.text(alphabet=st.sampled_from("abcdefghijklmnopqrstuvwxyz"), min_size=1, max_size=12))
    def test_greedy_maximality(self, word, vocab):
        pieces = tokenize_word(word, vocab)
        if pieces == ["[UNK]"]:
            return
        pos = 0
        for piece in pieces:
            bare = piece.removeprefix("##")
            prefix = "##" if pos > 0 else ""
            for longer in range(len(bare) + 1, len(word) - pos + 1):
                assert prefix + word[pos : pos + longer] not in vocab
            pos += len(bare)

    @given(word=st.text(alphabet=st.sampled_from("abcdefghijklmnopqrstuvwxyz"), min_size=1, max_size=12))
    def test_isolated_word_matches_word_in_sentence(self, word, vocab):
        inline = tokenize(f"the {word} oh", vocab)
        mid = [c.token for c in inline.components if c.word_index == 1]
        assert mid == tokenize_word(word, vocab)


class TestBacktrack:
    def test_component_maps_to_parent_word(self, vocab):
        seg = tokenize("the unable oh", vocab)
        idx = [c.token for c in seg.components].index("##able")
        assert backtrack_to_word(seg, idx).text == "unable"

    def test_out_of_range_rejected(self, vocab):
        seg = tokenize("oh", vocab)
        with pytest.raises(IndexError):
            backtrack_to_word(seg, 1)
        with pytest.raises(IndexError):
            backtrack_to_word(seg, -1)


class TestFragmentation:
    def test_counts(self, vocab):
        assert fragmentation("robustness", vocab) == 2
        assert fragmentation("a", vocab) == 1
        assert fragmentation("café", vocab) == 1

    def test_empty_word_rejected(self, vocab):
        with pytest.raises(ValueError):
            fragmentation("", vocab)


class TestShippedVocabulary:
    # bert-base-uncased segments these words exactly this way; the shipped
    # vocabulary must agree.
    @pytest.mark.parametrize(
        "word,expected",
        [
            ("robustness", ["robust", "##ness"]),
            ("adversarial", ["ad", "##vers", "##aria", "##l"]),
            ("inspird", ["ins", "##pi", "##rd"]),
            ("robustnesss", ["robust", "##ness", "##s"]),
        ],
    )
    def test_reference_segmentations(self, shipped, word, expected):
        assert tokenize_word(word, shipped) == expected

    def test_corpus_words_stay_whole(self, shipped):
        text = (DATA / "sentiment_dev.tsv").read_text(encoding="utf-8")
        words = {w for line in text.splitlines() for w in line.split("\t")[0].split()}
        for word in sorted(words):
            assert tokenize_word(word, shipped) == [word]

    def test_typod_word_fragments(self, shipped):
        assert fragmentation("wonderful", shipped) == 1
        assert fragmentation("wondrful", shipped) > 1
        assert tokenize_word("0wn", shipped) == ["0", "##w", "##n"]


def test_vocab_exposes_unknown_id(vocab_tokens=BASE_TOKENS):
    v = vocab_from_tokens(vocab_tokens)
    assert isinstance(v, Vocab)
    assert v.unk_id == 0
    assert "a" in v and "zz" not in v
