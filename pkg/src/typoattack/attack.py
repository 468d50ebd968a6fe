"""Budgeted greedy typo attack, corpus sweeps, and transfer evaluation.

One iteration of the loop: re-segment the current sentence, score every
subword component by the L2 norm of its gold-label loss gradient, pick a
target word under the policy, enumerate that word's typo candidates in
canonical order, and query the victim on each. The first candidate that
flips the prediction ends the attack; otherwise the candidate that
maximizes 1 - p(gold) is committed and the next iteration starts from
it. The budget caps committed edits, so a failed attack still returns
the best-effort perturbed sentence.

Typos are injected into the alphanumeric core of a whitespace token:
leading and trailing punctuation stays put, so "terrible." is attacked
as "terrible". Words already carrying a typo are skipped by default;
``allow_retarget`` restores the literal re-editable behavior.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import RemoteVictimError, VictimQueryError
from .keyboard import KeyboardLayout, SubstitutionTable, TypoSource, keyboard_typo
from .victim import (
    LabeledExample,
    Prediction,
    SaliencyView,
    whitespace_spans,
)


class PolicyKind(enum.Enum):
    """Target-word selection rule."""

    MAX_GRAD = "max-grad"
    MIN_GRAD = "min-grad"
    RANDOM = "random"


@dataclass(frozen=True)
class AttackPolicy:
    kind: PolicyKind
    rng_seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind is PolicyKind.RANDOM:
            if self.rng_seed is None:
                raise ValueError("random policy needs rng_seed")
        elif self.rng_seed is not None:
            raise ValueError(f"{self.kind.value} policy takes no rng_seed")


@dataclass(frozen=True)
class AttackConfig:
    budget: int
    policy: AttackPolicy
    enabled_sources: frozenset[TypoSource]
    allow_retarget: bool = False

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        object.__setattr__(self, "enabled_sources", frozenset(self.enabled_sources))
        if not self.enabled_sources:
            raise ValueError("enabled_sources is empty")


@dataclass
class AttackState:
    """Mutable loop state: the working sentence and its committed score."""

    x_best: str
    best_score: float = -1.0
    iterations_used: int = 0


@dataclass(frozen=True)
class IterationRecord:
    """One loop iteration: the selected word span and what happened to it.

    ``exhausted`` marks an iteration that ended the attack early because
    no eligible word remained or the selected word had no candidates;
    such an iteration commits no edit.
    """

    word_index: int | None
    word_text: str | None
    char_start: int | None
    char_end: int | None
    candidate_count: int
    chosen_variant: str | None
    score: float | None
    flipped: bool
    exhausted: bool


@dataclass(frozen=True)
class AttackResult:
    success: bool
    final_text: str
    adversarial_label: int | None
    transcript: tuple[IterationRecord, ...]
    original_prediction: Prediction
    original_text: str
    gold: int

    def text_after(self, budget: int) -> str:
        """Replay the first ``budget`` edits; the greedy loop makes this
        exactly the sentence an independent run at that budget ends on."""
        text = self.original_text
        for rec in self.transcript[:budget]:
            if rec.chosen_variant is None:
                break
            text = text[: rec.char_start] + rec.chosen_variant + text[rec.char_end :]
        return text


class Victim(Protocol):
    """What the attack needs from a classifier."""

    def predict(self, text: str) -> Prediction: ...

    def saliency_view(self, text: str, gold: int) -> SaliencyView: ...


_EMPTY_NORMS = np.empty(0)


def _core_span(word: str) -> tuple[int, int] | None:
    """Span from the first to the last alphanumeric character, or None."""
    first = next((i for i, ch in enumerate(word) if ch.isalnum()), None)
    if first is None:
        return None
    last = next(i for i in range(len(word) - 1, -1, -1) if word[i].isalnum())
    return first, last + 1


def select_target(
    view: SaliencyView,
    policy: AttackPolicy,
    modified: set[int],
    rng: np.random.Generator | None = None,
) -> int | None:
    """Index of the next word to attack, or None when targets are exhausted.

    Eligible words contain at least one letter or digit and are not in
    ``modified``. Gradient policies pick the word owning the extreme-norm
    component among eligible words' components, ties to the lowest
    component index; the random policy draws uniformly over eligible
    words from ``rng``.
    """
    eligible = {
        wi
        for wi, w in enumerate(view.words)
        if wi not in modified and _core_span(w.text) is not None
    }
    if not eligible:
        return None
    if policy.kind is PolicyKind.RANDOM:
        if rng is None:
            raise ValueError("random policy needs an rng")
        return int(rng.choice(sorted(eligible)))
    best_ci = None
    best_norm = -math.inf if policy.kind is PolicyKind.MAX_GRAD else math.inf
    for ci, wi in enumerate(view.component_word):
        if wi not in eligible:
            continue
        norm = float(view.norms[ci])
        better = norm > best_norm if policy.kind is PolicyKind.MAX_GRAD else norm < best_norm
        if better:
            best_ci, best_norm = ci, norm
    if best_ci is None:
        return None
    return view.component_word[best_ci]


def _overlaps(word_start: int, word_end: int, spans: list[tuple[int, int]]) -> bool:
    return any(a < word_end and word_start < b for a, b in spans)


def _shift_spans(
    spans: list[tuple[int, int]], start: int, end: int, new_len: int
) -> list[tuple[int, int]]:
    """Re-express modified spans after replacing [start, end) by new_len chars."""
    delta = new_len - (end - start)
    out = []
    for a, b in spans:
        if b <= start:
            out.append((a, b))
        elif a >= end:
            out.append((a + delta, b + delta))
        else:  # only reachable with allow_retarget; merge with the new edit
            out.append((min(a, start), max(b + delta, start + new_len)))
    out.append((start, start + new_len))
    return out


def attack(
    victim: Victim,
    example: LabeledExample,
    config: AttackConfig,
    *,
    layout: KeyboardLayout | None = None,
    tables: Mapping[TypoSource, SubstitutionTable] | None = None,
    rng: np.random.Generator | None = None,
) -> AttackResult:
    """Run the greedy budgeted attack on one initially-correct example.

    ``rng`` overrides the policy-seeded generator; the corpus runner uses
    it to give every example an independent, order-insensitive stream.
    """
    gold = example.label
    original = victim.predict(example.text)
    if original.label != gold:
        raise ValueError(
            "attack() expects an initially-correct example; "
            "attack_corpus() filters misclassified ones"
        )
    if rng is None and config.policy.kind is PolicyKind.RANDOM:
        rng = np.random.default_rng(config.policy.rng_seed)

    state = AttackState(x_best=example.text)
    modified: list[tuple[int, int]] = []
    transcript: list[IterationRecord] = []

    def failure() -> AttackResult:
        return AttackResult(
            False, state.x_best, None, tuple(transcript), original, example.text, gold
        )

    for _ in range(config.budget):
        if config.policy.kind is PolicyKind.RANDOM:
            view = SaliencyView(
                whitespace_spans(state.x_best), (), _EMPTY_NORMS, float("nan")
            )
        else:
            view = victim.saliency_view(state.x_best, gold)
        modified_idx = (
            set()
            if config.allow_retarget
            else {
                wi
                for wi, w in enumerate(view.words)
                if _overlaps(w.char_start, w.char_end, modified)
            }
        )
        target = select_target(view, config.policy, modified_idx, rng)
        if target is None:
            transcript.append(
                IterationRecord(None, None, None, None, 0, None, None, False, True)
            )
            return failure()

        word = view.words[target]
        rel_s, rel_e = _core_span(word.text)
        abs_s, abs_e = word.char_start + rel_s, word.char_start + rel_e
        candidates = keyboard_typo(
            word.text[rel_s:rel_e], config.enabled_sources, layout, tables
        )
        if not candidates:
            transcript.append(
                IterationRecord(
                    target, word.text, abs_s, abs_e, 0, None, None, False, True
                )
            )
            return failure()

        best_variant: str | None = None
        best_score = -1.0
        best_text = state.x_best
        for cand in candidates:
            x_typo = state.x_best[:abs_s] + cand.variant + state.x_best[abs_e:]
            pred = victim.predict(x_typo)
            score = 1.0 - float(pred.probs[gold])
            if pred.label != gold:
                transcript.append(
                    IterationRecord(
                        target, word.text, abs_s, abs_e,
                        len(candidates), cand.variant, score, True, False,
                    )
                )
                return AttackResult(
                    True, x_typo, int(pred.label), tuple(transcript),
                    original, example.text, gold,
                )
            if score > best_score:
                best_variant, best_score, best_text = cand.variant, score, x_typo

        modified = _shift_spans(modified, abs_s, abs_e, len(best_variant))
        state.x_best = best_text
        state.best_score = best_score
        state.iterations_used += 1
        transcript.append(
            IterationRecord(
                target, word.text, abs_s, abs_e,
                len(candidates), best_variant, best_score, False, False,
            )
        )
    return failure()


@dataclass(frozen=True)
class ExampleOutcome:
    """Per-example corpus entry; ``result`` is None when not attacked."""

    index: int
    example: LabeledExample
    attacked: bool
    result: AttackResult | None
    final_text: str
    success_iteration: int | None
    victim_error: str | None = None


@dataclass(frozen=True)
class CorpusAttackReport:
    accuracy_under_attack: float
    flip_rate: float
    clean_accuracy: float
    outcomes: tuple[ExampleOutcome, ...]
    victim_errors: int = 0

    def adversarial_examples(self) -> list[tuple[str, int]]:
        """(final_text, gold) pairs for transfer, originals where unattacked;
        victim-error examples are left out, matching the accuracy basis."""
        return [
            (o.final_text, o.example.label)
            for o in self.outcomes
            if o.victim_error is None
        ]

    def examples_after(self, budget: int) -> list[tuple[str, int]]:
        """Adversarial pairs as they stood at a smaller budget."""
        out = []
        for o in self.outcomes:
            if o.victim_error is not None:
                continue
            text = o.result.text_after(budget) if o.result else o.final_text
            out.append((text, o.example.label))
        return out


def attack_corpus(
    victim: Victim,
    corpus: Sequence[LabeledExample],
    config: AttackConfig,
    *,
    layout: KeyboardLayout | None = None,
    tables: Mapping[TypoSource, SubstitutionTable] | None = None,
) -> CorpusAttackReport:
    """Attack every initially-correct example. Misclassified ones count
    as errors without being attacked, so accuracy_under_attack at an
    unreachable budget equals clean accuracy. Examples on which the
    victim itself fails mid-query (remote victims only) are excluded
    from both accuracy denominators and reported separately."""
    if not corpus:
        raise ValueError("corpus is empty")
    outcomes: list[ExampleOutcome] = []
    attacked = flips = errors = 0
    for idx, ex in enumerate(corpus):
        try:
            if victim.predict(ex.text).label != ex.label:
                outcomes.append(ExampleOutcome(idx, ex, False, None, ex.text, None))
                continue
            rng = None
            if config.policy.kind is PolicyKind.RANDOM:
                # per-example stream: results don't depend on corpus order
                rng = np.random.default_rng([config.policy.rng_seed, idx])
            result = attack(victim, ex, config, layout=layout, tables=tables, rng=rng)
        except VictimQueryError as exc:
            errors += 1
            outcomes.append(
                ExampleOutcome(idx, ex, False, None, ex.text, None, str(exc))
            )
            continue
        attacked += 1
        flips += result.success
        outcomes.append(
            ExampleOutcome(
                idx, ex, True, result, result.final_text,
                len(result.transcript) if result.success else None,
            )
        )
    n = len(corpus) - errors
    if n == 0:
        raise RemoteVictimError(
            f"victim failed on every one of the {len(corpus)} examples"
        )
    return CorpusAttackReport(
        accuracy_under_attack=(attacked - flips) / n,
        flip_rate=flips / attacked if attacked else 0.0,
        clean_accuracy=attacked / n,
        outcomes=tuple(outcomes),
        victim_errors=errors,
    )


SOURCE_SET_PRESETS: dict[str, frozenset[TypoSource]] = {
    "insert": frozenset({TypoSource.INSERTION}),
    "delete": frozenset({TypoSource.DELETION}),
    "swap": frozenset({TypoSource.SWAP}),
    "mistype": frozenset({TypoSource.MISTYPE}),
    "wiki-typo": frozenset({TypoSource.PRONOUNCE, TypoSource.REPLACE_W}),
    "all": frozenset(TypoSource),
}

DEFAULT_RANDOM_SEEDS = (11, 12, 13, 14, 15)


@dataclass(frozen=True)
class SweepCell:
    policy: str
    source_set: str
    budget: int
    mean_accuracy: float
    std_accuracy: float
    mean_flip_rate: float
    examples_attacked: int
    n_runs: int


@dataclass(frozen=True)
class SweepReport:
    cells: tuple[SweepCell, ...]
    corpus_size: int
    k_values: tuple[int, ...]
    policies: tuple[str, ...]
    source_sets: tuple[str, ...]
    random_seeds: tuple[int, ...]


@dataclass(frozen=True)
class SweepRun:
    """One full-budget corpus run for a single grid point and seed."""

    policy: PolicyKind
    source_set: str
    seed: int | None
    budget: int
    report: CorpusAttackReport


def sweep_runs(
    victim: Victim,
    corpus: Sequence[LabeledExample],
    kmax: int,
    policies: Sequence[PolicyKind],
    source_sets: Mapping[str, Iterable[TypoSource]],
    *,
    random_seeds: Sequence[int] = DEFAULT_RANDOM_SEEDS,
    allow_retarget: bool = False,
    layout: KeyboardLayout | None = None,
    tables: Mapping[TypoSource, SubstitutionTable] | None = None,
) -> list[SweepRun]:
    """Every (policy, source set, seed) grid point attacked at budget kmax.

    Deterministic policies run once with seed None; the random policy
    runs once per entry of ``random_seeds``.
    """
    runs = []
    for kind in policies:
        seeds = tuple(random_seeds) if kind is PolicyKind.RANDOM else (None,)
        for name, sources in source_sets.items():
            for seed in seeds:
                config = AttackConfig(
                    kmax, AttackPolicy(kind, seed), frozenset(sources), allow_retarget
                )
                report = attack_corpus(
                    victim, corpus, config, layout=layout, tables=tables
                )
                runs.append(SweepRun(kind, name, seed, kmax, report))
    return runs


def _run_cells(run: SweepRun, ks: Sequence[int], corpus_size: int):
    """(accuracy, flip_rate) at each budget, read off the run's transcripts."""
    n = corpus_size - run.report.victim_errors
    attacked = sum(o.attacked for o in run.report.outcomes)
    succ = sorted(
        o.success_iteration
        for o in run.report.outcomes
        if o.success_iteration is not None
    )
    out = []
    for k in ks:
        flips = bisect.bisect_right(succ, k)
        out.append(((attacked - flips) / n, flips / attacked if attacked else 0.0))
    return attacked, out


def summarize_runs(
    runs: Sequence[SweepRun], k_values: Iterable[int], corpus_size: int
) -> tuple[SweepCell, ...]:
    """Aggregate runs into (policy, source set, budget) cells.

    Budgets below a run's own are read off its transcript prefix, which
    the greedy loop makes identical to an independent run at that
    budget. Budget 0 is the derived clean-accuracy row. Runs that share
    policy and source set (the random seeds) aggregate into one cell
    carrying mean and std.
    """
    ks = sorted(set(int(k) for k in k_values))
    if not runs:
        raise ValueError("no runs to summarize")
    if ks and ks[-1] > min(r.budget for r in runs):
        raise ValueError(
            f"budget axis max {ks[-1]} exceeds a run budget; rerun with a larger kmax"
        )
    groups: dict[tuple[PolicyKind, str], list[SweepRun]] = {}
    for run in runs:
        groups.setdefault((run.policy, run.source_set), []).append(run)

    cells: list[SweepCell] = []
    for (kind, name), group in groups.items():
        per_run = [_run_cells(run, ks, corpus_size) for run in group]
        attacked = per_run[0][0]
        for i, k in enumerate(ks):
            accs = np.array([cells_[i][0] for _, cells_ in per_run])
            flips = np.array([cells_[i][1] for _, cells_ in per_run])
            cells.append(
                SweepCell(
                    policy=kind.value,
                    source_set=name,
                    budget=k,
                    mean_accuracy=float(accs.mean()),
                    std_accuracy=float(accs.std()),
                    mean_flip_rate=float(flips.mean()),
                    examples_attacked=attacked,
                    n_runs=len(group),
                )
            )
    return tuple(cells)


def sweep(
    victim: Victim,
    corpus: Sequence[LabeledExample],
    k_values: Iterable[int],
    policies: Sequence[PolicyKind],
    source_sets: Mapping[str, Iterable[TypoSource]],
    *,
    random_seeds: Sequence[int] = DEFAULT_RANDOM_SEEDS,
    allow_retarget: bool = False,
    layout: KeyboardLayout | None = None,
    tables: Mapping[TypoSource, SubstitutionTable] | None = None,
) -> SweepReport:
    """Cross product of (policy, source set, budget) over one corpus.

    Each (policy, source set, seed) row runs once at the largest budget
    and smaller-budget cells derive from transcript prefixes; see
    summarize_runs. Deterministic policies report std 0.
    """
    ks = sorted(set(int(k) for k in k_values))
    if not ks or ks[0] < 0:
        raise ValueError(f"bad budget axis {ks}")
    if not policies or not source_sets:
        raise ValueError("empty policy or source-set axis")
    kmax = max(ks) if ks[-1] > 0 else 1
    runs = sweep_runs(
        victim, corpus, kmax, policies, source_sets,
        random_seeds=random_seeds, allow_retarget=allow_retarget,
        layout=layout, tables=tables,
    )
    return SweepReport(
        cells=summarize_runs(runs, ks, len(corpus)),
        corpus_size=len(corpus),
        k_values=tuple(ks),
        policies=tuple(p.value for p in policies),
        source_sets=tuple(source_sets),
        random_seeds=tuple(random_seeds),
    )


def transfer_eval(
    adv_examples: Iterable[tuple[str, int]], victim_b: Victim
) -> float:
    """Plain accuracy of another victim on already-perturbed texts."""
    pairs = list(adv_examples)
    if not pairs:
        raise ValueError("no adversarial examples to evaluate")
    correct = sum(victim_b.predict(text).label == gold for text, gold in pairs)
    return correct / len(pairs)
