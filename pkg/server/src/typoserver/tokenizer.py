"""Uncased WordPiece tokenizer with sequence delimiters.

Greedy longest-prefix matching over a fixed vocabulary; non-initial
pieces carry the "##" continuation marker. Any word with an unmatchable
remainder becomes a single [UNK], the convention pretrained uncased
checkpoints use. Every encoded sequence is wrapped in [CLS] ... [SEP],
and those delimiters are flagged with word index -1 so clients never
treat them as attackable words.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP)


@dataclass(frozen=True)
class Encoding:
    """Token ids plus, per token, the whitespace word it came from."""

    ids: tuple[int, ...]
    tokens: tuple[str, ...]
    word_index: tuple[int, ...]  # -1 for sequence delimiters


class WordPieceTokenizer:
    def __init__(self, tokens: Sequence[str]):
        tokens = tuple(tokens)
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary contains duplicate tokens")
        missing = [t for t in SPECIAL_TOKENS if t not in tokens]
        if missing:
            raise ValueError(f"vocabulary lacks special tokens {missing}")
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}
        self.pad_id = self.index[PAD]
        self.unk_id = self.index[UNK]
        self.cls_id = self.index[CLS]
        self.sep_id = self.index[SEP]
        digest = hashlib.sha256("\n".join(tokens).encode("utf-8")).hexdigest()
        self.tokenizer_id = f"wordpiece-uncased-{digest[:12]}"

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_vocab_file(cls, path: str | Path) -> "WordPieceTokenizer":
        """One token per line; missing special tokens are prepended."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        listed = [line for line in lines if line.strip()]
        specials = [t for t in SPECIAL_TOKENS if t not in listed]
        return cls(specials + listed)

    def word_pieces(self, word: str) -> list[str]:
        w = word.lower()
        pieces: list[str] = []
        start = 0
        while start < len(w):
            end = len(w)
            match = None
            while start < end:
                piece = w[start:end]
                if start > 0:
                    piece = "##" + piece
                if piece in self.index:
                    match = piece
                    break
                end -= 1
            if match is None:
                return [UNK]
            pieces.append(match)
            start = end
        return pieces or [UNK]

    def encode(self, text: str, max_len: int = 128) -> Encoding:
        if max_len < 3:
            raise ValueError(f"max_len {max_len} leaves no room for content")
        tokens = [CLS]
        word_index = [-1]
        budget = max_len - 2
        for wi, word in enumerate(text.split()):
            for piece in self.word_pieces(word):
                if len(tokens) - 1 >= budget:
                    break
                tokens.append(piece)
                word_index.append(wi)
        tokens.append(SEP)
        word_index.append(-1)
        ids = tuple(self.index[t] for t in tokens)
        return Encoding(ids, tuple(tokens), tuple(word_index))
