"""Build the shipped subword vocabulary (data/wordpiece_vocab.txt).

The vocabulary keeps every corpus word whole while typo'd forms shatter
into single-character pieces. It also carries the handful of multi-piece
entries needed to agree with bert-base-uncased on some reference words
that greedy segmentation gets wrong with a naive vocabulary; the checks
at the bottom pin that behavior.

Run from anywhere: python3 scripts/build_vocab.py
"""

import string
import sys
from pathlib import Path

from lexicon import ALL_WORDS

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

PUNCTUATION = list("!\"'(),-.:;?")

# Multi-piece entries matching bert-base-uncased's segmentation of words
# our corpus never uses whole.
PIECES = ["robust", "##ness", "ad", "##vers", "##aria", "ins", "##pi", "##rd"]

# bert-base-uncased reference segmentations (greedy longest prefix).
REFERENCE = {
    "robustness": ["robust", "##ness"],
    "adversarial": ["ad", "##vers", "##aria", "##l"],
    "inspird": ["ins", "##pi", "##rd"],
    "robustnesss": ["robust", "##ness", "##s"],
}


def build_tokens() -> list[str]:
    tokens = ["[UNK]"]
    tokens += PUNCTUATION
    tokens += list(string.digits)
    tokens += ["##" + d for d in string.digits]
    tokens += list(string.ascii_lowercase)
    tokens += ["##" + c for c in string.ascii_lowercase]
    tokens += PIECES
    tokens += [w for w in ALL_WORDS if w not in set(tokens)]
    return tokens


def main() -> None:
    from typoattack.wordpiece import tokenize, vocab_from_tokens

    tokens = build_tokens()
    vocab = vocab_from_tokens(tokens)

    for word, expected in REFERENCE.items():
        got = [c.token for c in tokenize(word, vocab).components]
        assert got == expected, f"{word}: {got} != {expected}"
    for word in ALL_WORDS:
        got = [c.token for c in tokenize(word, vocab).components]
        assert got == [word], f"{word} should stay whole, got {got}"

    out = REPO / "data" / "wordpiece_vocab.txt"
    out.parent.mkdir(exist_ok=True)
    out.write_text("\n".join(tokens) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(tokens)} tokens)")


if __name__ == "__main__":
    main()
