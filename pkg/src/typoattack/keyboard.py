"""QWERTY keyboard model and deterministic typo candidate generation.

Six typo sources are supported: character/space insertion, character
deletion, adjacent-character swap, neighbor-key mistype, and two
table-driven whole-word substitutions (close-pronunciation typos and
common human misspellings). Every character edit is constrained to keys
that are physically adjacent on the keyboard grid, so candidates look
like plausible typing mistakes rather than random noise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

__all__ = [
    "KeyboardLayout",
    "TypoSource",
    "TypoCandidate",
    "SubstitutionTable",
    "default_layout",
    "gen_insertion",
    "gen_deletion",
    "gen_swap",
    "gen_mistype",
    "gen_table_sub",
    "keyboard_typo",
]

# Physical QWERTY grid, number row first. Punctuation keys are deliberately
# absent: they never participate in adjacency.
DEFAULT_QWERTY_ROWS = ("1234567890", "qwertyuiop", "asdfghjkl", "zxcvbnm")

# Stagger-aware adjacency: same row left/right, the key above and
# above-right, the key below and below-left. Symmetric by construction
# (the offset set is closed under negation).
_STAGGER_OFFSETS = ((0, -1), (0, 1), (-1, 0), (-1, 1), (1, 0), (1, -1))

_REQUIRED_KEYS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789")


class TypoSource(enum.Enum):
    """The six typo sources. Declaration order is the canonical order."""

    INSERTION = "insertion"
    DELETION = "deletion"
    SWAP = "swap"
    MISTYPE = "mistype"
    PRONOUNCE = "pronounce"
    REPLACE_W = "replace-w"


_SOURCE_ORDER = {source: i for i, source in enumerate(TypoSource)}


@dataclass(frozen=True)
class KeyboardLayout:
    """A keyboard grid and the key-adjacency relation it induces.

    ``rows`` lists the key strings top row first. Every lowercase letter
    and digit must appear exactly once; no key may repeat.
    """

    rows: tuple[str, ...]
    position: dict[str, tuple[int, int]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        position: dict[str, tuple[int, int]] = {}
        for r, row in enumerate(self.rows):
            for c, key in enumerate(row):
                if key in position:
                    raise ValueError(f"duplicate key {key!r} in keyboard layout")
                position[key] = (r, c)
        missing = _REQUIRED_KEYS - position.keys()
        if missing:
            raise ValueError(
                "keyboard layout is missing keys: " + "".join(sorted(missing))
            )
        object.__setattr__(self, "position", position)

    @classmethod
    def from_file(cls, path: str | Path) -> "KeyboardLayout":
        """Load a layout from a plain-text file, one row of keys per line."""
        rows = tuple(
            line.strip()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        if not rows:
            raise ValueError(f"keyboard layout file {path} is empty")
        return cls(rows)

    def neighbors(self, key: str) -> frozenset[str]:
        """Keys physically adjacent to ``key``; empty for off-grid characters."""
        pos = self.position.get(key)
        if pos is None:
            return frozenset()
        r, c = pos
        found = []
        for dr, dc in _STAGGER_OFFSETS:
            rr, cc = r + dr, c + dc
            if 0 <= rr < len(self.rows) and 0 <= cc < len(self.rows[rr]):
                found.append(self.rows[rr][cc])
        return frozenset(found)


_DEFAULT_LAYOUT: KeyboardLayout | None = None


def default_layout() -> KeyboardLayout:
    """The embedded QWERTY layout (shared singleton)."""
    global _DEFAULT_LAYOUT
    if _DEFAULT_LAYOUT is None:
        _DEFAULT_LAYOUT = KeyboardLayout(DEFAULT_QWERTY_ROWS)
    return _DEFAULT_LAYOUT


def neighbors(key: str, layout: KeyboardLayout | None = None) -> frozenset[str]:
    """Keys adjacent to ``key`` on ``layout`` (default QWERTY)."""
    return (layout or default_layout()).neighbors(key)


@dataclass(frozen=True)
class TypoCandidate:
    """One candidate typo for a word.

    ``edit_position`` is the index in the original word that the edit
    anchors to; it is None for whole-word substitutions (pronounce and
    replace-w sources).
    """

    original: str
    variant: str
    source: TypoSource
    edit_position: int | None = None

    def __post_init__(self) -> None:
        if self.variant == self.original:
            raise ValueError("typo candidate must differ from the original word")


@dataclass(frozen=True)
class SubstitutionTable:
    """Whole-word substitutions: word -> plausible typed variants.

    Keys are lowercase and no word maps to itself. ``provenance`` records
    which source the entries came from (pronounce or replace-w).
    """

    entries: Mapping[str, frozenset[str]]
    provenance: TypoSource

    def __post_init__(self) -> None:
        if self.provenance not in (TypoSource.PRONOUNCE, TypoSource.REPLACE_W):
            raise ValueError(f"bad substitution table provenance: {self.provenance}")
        for word, variants in self.entries.items():
            if word != word.lower():
                raise ValueError(f"substitution table key not lowercase: {word!r}")
            if word in variants:
                raise ValueError(f"substitution table maps {word!r} to itself")

    def lookup(self, word: str) -> frozenset[str]:
        return self.entries.get(word.lower(), frozenset())


def _match_case(replacement: str, reference: str) -> str:
    if reference.isupper() and replacement.isalpha():
        return replacement.upper()
    return replacement


def _dedup(candidates: Iterable[TypoCandidate]) -> set[TypoCandidate]:
    # One candidate per variant string; the lowest edit position wins.
    best: dict[str, TypoCandidate] = {}
    for cand in candidates:
        kept = best.get(cand.variant)
        if kept is None or _position_key(cand) < _position_key(kept):
            best[cand.variant] = cand
    return set(best.values())


def _position_key(cand: TypoCandidate) -> int:
    return -1 if cand.edit_position is None else cand.edit_position


def _require_word(word: str) -> None:
    if not word:
        raise ValueError("word must be non-empty")


def gen_insertion(word: str, layout: KeyboardLayout | None = None) -> set[TypoCandidate]:
    """Insertion typos: duplicated key, adjacent key slips, interior spaces."""
    _require_word(word)
    layout = layout or default_layout()
    out = []
    for i, ch in enumerate(word):
        out.append(
            TypoCandidate(word, word[:i] + ch + word[i:], TypoSource.INSERTION, i)
        )
        for nb in sorted(layout.neighbors(ch.lower())):
            slip = _match_case(nb, ch)
            out.append(
                TypoCandidate(word, word[:i] + slip + word[i:], TypoSource.INSERTION, i)
            )
            out.append(
                TypoCandidate(
                    word, word[: i + 1] + slip + word[i + 1 :], TypoSource.INSERTION, i
                )
            )
    for i in range(1, len(word)):
        out.append(TypoCandidate(word, word[:i] + " " + word[i:], TypoSource.INSERTION, i))
    return _dedup(out)


def gen_deletion(word: str) -> set[TypoCandidate]:
    """Deletion typos, one per position. Length-1 words yield nothing."""
    _require_word(word)
    if len(word) < 2:
        return set()
    return _dedup(
        TypoCandidate(word, word[:i] + word[i + 1 :], TypoSource.DELETION, i)
        for i in range(len(word))
    )


def gen_swap(word: str) -> set[TypoCandidate]:
    """Adjacent transpositions; pairs of equal characters are skipped."""
    _require_word(word)
    out = []
    for i in range(len(word) - 1):
        if word[i] == word[i + 1]:
            continue
        variant = word[:i] + word[i + 1] + word[i] + word[i + 2 :]
        out.append(TypoCandidate(word, variant, TypoSource.SWAP, i))
    return _dedup(out)


def gen_mistype(word: str, layout: KeyboardLayout | None = None) -> set[TypoCandidate]:
    """Mistypes: each character replaced by each of its keyboard neighbors."""
    _require_word(word)
    layout = layout or default_layout()
    out = []
    for i, ch in enumerate(word):
        for nb in sorted(layout.neighbors(ch.lower())):
            variant = word[:i] + _match_case(nb, ch) + word[i + 1 :]
            out.append(TypoCandidate(word, variant, TypoSource.MISTYPE, i))
    return _dedup(out)


def gen_table_sub(word: str, table: SubstitutionTable) -> set[TypoCandidate]:
    """Whole-word substitutions from a pronounce/replace-w table."""
    out = []
    for variant in table.lookup(word):
        cased = variant.title() if word.istitle() and len(word) > 1 else variant
        if cased == word:
            continue
        out.append(TypoCandidate(word, cased, table.provenance, None))
    return _dedup(out)


def keyboard_typo(
    word: str,
    enabled_sources: Iterable[TypoSource],
    layout: KeyboardLayout | None = None,
    tables: Mapping[TypoSource, SubstitutionTable] | None = None,
) -> list[TypoCandidate]:
    """All typo candidates for ``word`` under the enabled sources.

    The result is deduplicated on the variant string and canonically
    ordered (source declaration order, then edit position, then variant),
    so callers iterating it are deterministic.
    """
    _require_word(word)
    layout = layout or default_layout()
    tables = tables or {}
    enabled = set(enabled_sources)
    pool: list[TypoCandidate] = []
    for source in TypoSource:
        if source not in enabled:
            continue
        if source is TypoSource.INSERTION:
            pool.extend(gen_insertion(word, layout))
        elif source is TypoSource.DELETION:
            pool.extend(gen_deletion(word))
        elif source is TypoSource.SWAP:
            pool.extend(gen_swap(word))
        elif source is TypoSource.MISTYPE:
            pool.extend(gen_mistype(word, layout))
        elif source in tables:
            pool.extend(gen_table_sub(word, tables[source]))
    pool.sort(key=lambda c: (_SOURCE_ORDER[c.source], _position_key(c), c.variant))
    seen: set[str] = set()
    ordered = []
    for cand in pool:
        if cand.variant not in seen:
            seen.add(cand.variant)
            ordered.append(cand)
    return ordered
