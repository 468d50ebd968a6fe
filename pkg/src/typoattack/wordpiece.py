"""Whitespace + greedy WordPiece tokenization with character-span bookkeeping.

A sentence is first split on whitespace, with punctuation peeled off into
standalone words. Each word is lowercased and segmented by greedy
longest-prefix matching against the vocabulary; non-initial pieces carry
the "##" continuation marker. Every component keeps (word_index,
char_start, char_end) back-pointers into the original string, so a
subword component can be traced back to the exact word that produced it.
"""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

UNK_TOKEN = "[UNK]"
CONTINUATION_PREFIX = "##"
MAX_WORD_CHARS = 100

_ASCII_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Vocab:
    """An ordered token vocabulary; ids are dense 0..len-1 (line numbers)."""

    tokens: tuple[str, ...]
    index: dict[str, int]
    sha256: str
    continuation_prefix: str = CONTINUATION_PREFIX
    unk_token: str = UNK_TOKEN

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id_of(self, token: str) -> int:
        return self.index[token]

    @property
    def unk_id(self) -> int:
        return self.index[self.unk_token]


def _build_vocab(tokens: list[str], digest: str) -> Vocab:
    index: dict[str, int] = {}
    for i, token in enumerate(tokens):
        if not token:
            raise DataError(f"vocabulary has an empty token at line {i + 1}")
        if token in index:
            raise DataError(
                f"vocabulary has duplicate token {token!r} at line {i + 1} "
                f"(first seen at line {index[token] + 1})"
            )
        index[token] = i
    if UNK_TOKEN not in index:
        raise DataError(f"vocabulary is missing the unknown token {UNK_TOKEN!r}")
    missing = [
        t
        for letter in _ASCII_LETTERS
        for t in (letter, CONTINUATION_PREFIX + letter)
        if t not in index
    ]
    if missing:
        raise DataError(
            "vocabulary is missing single-letter fallback tokens: "
            + ", ".join(missing[:8])
            + ("..." if len(missing) > 8 else "")
        )
    return Vocab(tuple(tokens), index, digest)


def load_vocab(path: str | Path) -> Vocab:
    """Load a one-token-per-line vocabulary file (id = line number)."""
    raw = Path(path).read_bytes()
    tokens = raw.decode("utf-8").splitlines()
    while tokens and not tokens[-1]:
        tokens.pop()
    return _build_vocab([t.rstrip("\r") for t in tokens], hashlib.sha256(raw).hexdigest())


def vocab_from_tokens(tokens: list[str]) -> Vocab:
    """Build a Vocab directly from a token list (tests, embedded fixtures)."""
    digest = hashlib.sha256("\n".join(tokens).encode("utf-8")).hexdigest()
    return _build_vocab(list(tokens), digest)


@dataclass(frozen=True)
class WordSpan:
    """A whitespace/punctuation-level word and its character span."""

    word_index: int
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class Component:
    """One subword component with its parent word and character span."""

    token: str
    word_index: int
    char_start: int
    char_end: int


@dataclass(frozen=True)
class Segmentation:
    """A text split into words and subword components, spans included."""

    text: str
    words: tuple[WordSpan, ...]
    components: tuple[Component, ...]

    @property
    def n_components(self) -> int:
        return len(self.components)


def _is_punctuation(ch: str) -> bool:
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def pretokenize(text: str) -> list[WordSpan]:
    """Split on whitespace, peeling punctuation into standalone words."""
    words: list[WordSpan] = []
    start: int | None = None

    def flush(end: int) -> None:
        nonlocal start
        if start is not None:
            words.append(WordSpan(len(words), text[start:end], start, end))
            start = None

    for i, ch in enumerate(text):
        if ch.isspace():
            flush(i)
        elif _is_punctuation(ch):
            flush(i)
            words.append(WordSpan(len(words), ch, i, i + 1))
        elif start is None:
            start = i
    flush(len(text))
    return words


def tokenize_word(word: str, vocab: Vocab) -> list[str]:
    """Greedy longest-prefix WordPiece split of a single (pre-split) word.

    Returns the component tokens; a word with any unmatched remainder, an
    over-long word, or a non-ASCII word collapses to the unknown token.
    """
    if not word or len(word) > MAX_WORD_CHARS or not word.isascii():
        return [vocab.unk_token]
    lowered = word.lower()
    pieces: list[str] = []
    start = 0
    while start < len(lowered):
        end = len(lowered)
        match = None
        while start < end:
            piece = lowered[start:end]
            if start > 0:
                piece = vocab.continuation_prefix + piece
            if piece in vocab:
                match = piece
                break
            end -= 1
        if match is None:
            return [vocab.unk_token]
        pieces.append(match)
        start = end
    return pieces


def tokenize(text: str, vocab: Vocab) -> Segmentation:
    """Segment ``text`` into words and WordPiece components with spans."""
    words = pretokenize(text)
    components: list[Component] = []
    for word in words:
        pieces = tokenize_word(word.text, vocab)
        # A pretokenized word never contains "[", so the unknown token can
        # only mean fallback; its span is the whole word.
        if pieces == [vocab.unk_token]:
            components.append(
                Component(vocab.unk_token, word.word_index, word.char_start, word.char_end)
            )
            continue
        offset = word.char_start
        for piece in pieces:
            length = len(piece) - (
                len(vocab.continuation_prefix) if piece.startswith(vocab.continuation_prefix) else 0
            )
            components.append(Component(piece, word.word_index, offset, offset + length))
            offset += length
    return Segmentation(text, tuple(words), tuple(components))


def backtrack_to_word(seg: Segmentation, component_index: int) -> WordSpan:
    """The parent word of component ``component_index``."""
    if not 0 <= component_index < len(seg.components):
        raise IndexError(
            f"component index {component_index} out of range "
            f"(segmentation has {len(seg.components)} components)"
        )
    return seg.words[seg.components[component_index].word_index]


def fragmentation(word: str, vocab: Vocab) -> int:
    """How many subword components ``word`` splits into (unknown counts as 1)."""
    if not word:
        raise ValueError("word must be non-empty")
    return len(tokenize(word, vocab).components)
