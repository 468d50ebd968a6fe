"""Corpus and substitution-table loaders.

Sentiment corpora are flat TSV, one "sentence<TAB>label" per line.
Misspelling lists use the arrow line format "misspelling->correct" with
comma-separated alternatives; they are inverted on load because the
attack walks correct words toward their misspellings. Pronunciation
tables use the same arrow lines but already read "correct->typos", so
they load without inversion.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .keyboard import SubstitutionTable, TypoSource
from .victim import LabeledExample


@dataclass(frozen=True)
class Corpus:
    examples: tuple[LabeledExample, ...]
    num_classes: int
    name: str

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise DataError(f"corpus {self.name!r} needs >= 2 classes")
        for ex in self.examples:
            if not 0 <= ex.label < self.num_classes:
                raise DataError(
                    f"corpus {self.name!r}: label {ex.label} outside "
                    f"[0, {self.num_classes})"
                )

    def __len__(self) -> int:
        return len(self.examples)


def load_tsv_corpus(path: str | Path) -> Corpus:
    """Corpus from a TSV file, one example per line, errors by line number."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 ({exc})") from exc

    examples = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(
                f"{path}:{lineno}: expected 'sentence<TAB>label', "
                f"got {len(parts) - 1} tabs"
            )
        text, label_str = parts
        if not text.strip():
            raise DataError(f"{path}:{lineno}: empty sentence")
        try:
            label = int(label_str)
        except ValueError:
            raise DataError(
                f"{path}:{lineno}: label {label_str!r} is not an integer"
            ) from None
        if label < 0:
            raise DataError(f"{path}:{lineno}: negative label {label}")
        examples.append(LabeledExample(text, label))
    if not examples:
        raise DataError(f"{path}: no examples")
    num_classes = max(ex.label for ex in examples) + 1
    return Corpus(tuple(examples), max(num_classes, 2), path.stem)


def save_tsv_corpus(corpus: Corpus, path: str | Path) -> None:
    """Inverse of load_tsv_corpus; loading the result round-trips."""
    lines = [f"{ex.text}\t{ex.label}" for ex in corpus.examples]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class LoadSummary:
    path: str
    entries: int
    variants: int
    parsed_lines: int
    skipped_lines: int
    dropped_self_maps: int


def _arrow_lines(path: Path):
    """(lineno, left, [right...]) per parseable line; None marks a skip."""
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "->" not in line:
            yield lineno, None, None
            continue
        left, right = line.split("->", 1)
        left = left.strip().lower()
        rights = [r.strip().lower() for r in right.split(",")]
        rights = [r for r in rights if r]
        if not left or not rights:
            yield lineno, None, None
            continue
        yield lineno, left, rights


def _summarize(path: Path, mapping: dict[str, list[str]], parsed, skipped, self_maps):
    return LoadSummary(
        path=str(path),
        entries=len(mapping),
        variants=sum(len(v) for v in mapping.values()),
        parsed_lines=parsed,
        skipped_lines=skipped,
        dropped_self_maps=self_maps,
    )


def load_misspellings(path: str | Path) -> tuple[SubstitutionTable, LoadSummary]:
    """Wikipedia-style list, INVERTED to correct word -> misspellings."""
    path = Path(path)
    mapping: dict[str, list[str]] = {}
    parsed = skipped = self_maps = 0
    for _, missp, corrects in _arrow_lines(path):
        if missp is None:
            skipped += 1
            continue
        parsed += 1
        for correct in corrects:
            if correct == missp:
                self_maps += 1
                continue
            bucket = mapping.setdefault(correct, [])
            if missp not in bucket:
                bucket.append(missp)
    if not mapping:
        raise DataError(f"{path}: no usable misspelling entries")
    table = SubstitutionTable(
        {k: tuple(v) for k, v in mapping.items()}, TypoSource.REPLACE_W
    )
    return table, _summarize(path, mapping, parsed, skipped, self_maps)


def load_pronounce_table(path: str | Path) -> tuple[SubstitutionTable, LoadSummary]:
    """Pronunciation-driven typos, already in correct -> typos direction."""
    path = Path(path)
    mapping: dict[str, list[str]] = {}
    parsed = skipped = self_maps = 0
    for _, correct, typos in _arrow_lines(path):
        if correct is None:
            skipped += 1
            continue
        parsed += 1
        for typo in typos:
            if typo == correct:
                self_maps += 1
                continue
            bucket = mapping.setdefault(correct, [])
            if typo not in bucket:
                bucket.append(typo)
    if not mapping:
        raise DataError(f"{path}: no usable pronunciation entries")
    table = SubstitutionTable(
        {k: tuple(v) for k, v in mapping.items()}, TypoSource.PRONOUNCE
    )
    return table, _summarize(path, mapping, parsed, skipped, self_maps)


def load_typo_tables(
    pronounce_path: str | Path | None = None,
    misspellings_path: str | Path | None = None,
) -> dict[TypoSource, SubstitutionTable]:
    """Whichever whole-word tables the caller configured, keyed by source."""
    tables: dict[TypoSource, SubstitutionTable] = {}
    if pronounce_path is not None:
        tables[TypoSource.PRONOUNCE] = load_pronounce_table(pronounce_path)[0]
    if misspellings_path is not None:
        tables[TypoSource.REPLACE_W] = load_misspellings(misspellings_path)[0]
    return tables
