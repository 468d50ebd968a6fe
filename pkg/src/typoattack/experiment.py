"""Experiment orchestration: key=value config files, victim construction,
seeded sweep and transfer runs, and report emission.

Reports are deterministic: no timestamps, stable cell order, canonical
float formatting. Rerunning an identical config reproduces every output
file byte for byte. Each report embeds the config hash, master seed,
vocabulary hash, and corpus identity needed to reproduce it.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .attack import (
    DEFAULT_RANDOM_SEEDS,
    PolicyKind,
    SOURCE_SET_PRESETS,
    SweepReport,
    SweepRun,
    Victim,
    summarize_runs,
    sweep_runs,
    transfer_eval,
)
from .data import Corpus, load_tsv_corpus, load_typo_tables
from .errors import DataError, RemoteVictimError, UsageError
from .keyboard import SubstitutionTable, TypoSource
from .remote import RemoteVictim, VictimEndpoint
from .victim import BuiltinModel, Hyperparams, LabeledExample, load_model, train
from .wordpiece import Vocab, load_vocab

DEFAULT_K_VALUES = (0, 1, 2, 3, 4, 5)
DEFAULT_POLICIES = (PolicyKind.MAX_GRAD, PolicyKind.MIN_GRAD, PolicyKind.RANDOM)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run needs, loadable from a key=value file."""

    out_dir: Path = Path("runs")
    train_path: Path | None = None
    dev_path: Path | None = None
    vocab_path: Path | None = None
    victim: str = "builtin"
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    model_path: Path | None = None
    remote_kind: str = "stdio-subprocess"
    remote_argv: tuple[str, ...] = ()
    remote_host: str | None = None
    remote_port: int | None = None
    remote_timeout_ms: int = 10_000
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    policies: tuple[PolicyKind, ...] = DEFAULT_POLICIES
    source_sets: tuple[str, ...] = ("all",)
    random_seeds: tuple[int, ...] = DEFAULT_RANDOM_SEEDS
    allow_retarget: bool = False
    pronounce_path: Path | None = None
    misspellings_path: Path | None = None
    master_seed: int = 13
    limit: int | None = None
    train_unit: str = "sentence"

    def __post_init__(self) -> None:
        if self.victim not in ("builtin", "remote"):
            raise UsageError(f"victim must be builtin or remote, not {self.victim!r}")
        ks = tuple(sorted(set(int(k) for k in self.k_values)))
        if not ks or ks[0] < 0:
            raise UsageError(f"bad budget axis {self.k_values!r}")
        object.__setattr__(self, "k_values", ks)
        if not self.policies:
            raise UsageError("at least one attack policy is required")
        unknown = [s for s in self.source_sets if s not in SOURCE_SET_PRESETS]
        if unknown or not self.source_sets:
            known = ", ".join(sorted(SOURCE_SET_PRESETS))
            raise UsageError(f"unknown source sets {unknown!r}; choose from {known}")
        if PolicyKind.RANDOM in self.policies and not self.random_seeds:
            raise UsageError("random policy requires at least one seed")
        if self.limit is not None and self.limit < 1:
            raise UsageError(f"limit must be positive, not {self.limit}")
        if self.train_unit not in ("sentence", "phrase"):
            raise UsageError(
                f"train_unit must be sentence or phrase, not {self.train_unit!r}"
            )


_BOOL_WORDS = {"true": True, "yes": True, "1": True,
               "false": False, "no": False, "0": False}


def _bool(key: str, raw: str) -> bool:
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise UsageError(f"{key}: expected true/false, got {raw!r}") from None


def _int(key: str, raw: str) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise UsageError(f"{key}: expected an integer, got {raw!r}") from None


def _float(key: str, raw: str) -> float:
    try:
        return float(raw.strip())
    except ValueError:
        raise UsageError(f"{key}: expected a number, got {raw!r}") from None


def _ints(key: str, raw: str) -> tuple[int, ...]:
    return tuple(_int(key, part) for part in raw.split(",") if part.strip())


def _names(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _policies(key: str, raw: str) -> tuple[PolicyKind, ...]:
    out = []
    for name in _names(raw):
        try:
            out.append(PolicyKind(name))
        except ValueError:
            valid = ", ".join(p.value for p in PolicyKind)
            raise UsageError(f"{key}: unknown policy {name!r}; choose from {valid}") from None
    return tuple(out)


def config_from_pairs(
    pairs: Mapping[str, str], base: Path | None = None
) -> ExperimentConfig:
    """Builds a config from string key=value pairs (file or CLI overrides).

    Relative paths resolve against ``base`` (the config file's directory).
    """
    base = Path(".") if base is None else base

    def path_of(raw: str) -> Path:
        p = Path(raw.strip())
        return p if p.is_absolute() else base / p

    kwargs: dict = {}
    hp_fields: dict = {}
    for key, raw in pairs.items():
        if key == "train":
            kwargs["train_path"] = path_of(raw)
        elif key == "dev":
            kwargs["dev_path"] = path_of(raw)
        elif key == "vocab":
            kwargs["vocab_path"] = path_of(raw)
        elif key == "out_dir":
            kwargs["out_dir"] = path_of(raw)
        elif key == "model":
            kwargs["model_path"] = path_of(raw)
        elif key == "pronounce":
            kwargs["pronounce_path"] = path_of(raw)
        elif key == "misspellings":
            kwargs["misspellings_path"] = path_of(raw)
        elif key == "victim":
            kwargs["victim"] = raw.strip()
        elif key == "remote_kind":
            kwargs["remote_kind"] = raw.strip()
        elif key == "remote_command":
            kwargs["remote_argv"] = tuple(shlex.split(raw))
        elif key == "remote_host":
            kwargs["remote_host"] = raw.strip()
        elif key == "remote_port":
            kwargs["remote_port"] = _int(key, raw)
        elif key == "remote_timeout_ms":
            kwargs["remote_timeout_ms"] = _int(key, raw)
        elif key == "k_values":
            kwargs["k_values"] = _ints(key, raw)
        elif key == "policies":
            kwargs["policies"] = _policies(key, raw)
        elif key == "sources":
            kwargs["source_sets"] = _names(raw)
        elif key == "random_seeds":
            kwargs["random_seeds"] = _ints(key, raw)
        elif key == "allow_retarget":
            kwargs["allow_retarget"] = _bool(key, raw)
        elif key == "master_seed":
            kwargs["master_seed"] = _int(key, raw)
        elif key == "limit":
            kwargs["limit"] = _int(key, raw)
        elif key == "train_unit":
            kwargs["train_unit"] = raw.strip()
        elif key in ("embed_dim", "hidden_dim", "epochs", "batch_size", "train_seed"):
            hp_fields["seed" if key == "train_seed" else key] = _int(key, raw)
        elif key in ("learning_rate", "init_scale"):
            hp_fields[key] = _float(key, raw)
        else:
            raise UsageError(f"unknown config key {key!r}")
    # train seed follows the master seed unless pinned explicitly
    hp_fields.setdefault("seed", kwargs.get("master_seed", 13))
    kwargs["hyperparams"] = Hyperparams(**hp_fields)
    return ExperimentConfig(**kwargs)


def parse_config_file(path: str | Path) -> ExperimentConfig:
    """key = value lines; # comments and blank lines ignored."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in pairs:
            raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return config_from_pairs(pairs, base=path.parent)


def apply_overrides(config: ExperimentConfig, pairs: Mapping[str, str]) -> ExperimentConfig:
    """Re-derives a config with CLI key=value pairs layered on top."""
    merged = dict(config_echo(config))
    merged.update(pairs)
    return config_from_pairs(merged)


def config_echo(config: ExperimentConfig) -> dict[str, str]:
    """The config as the key=value pairs that reproduce it."""
    hp = config.hyperparams
    echo: dict[str, str] = {}

    def put_path(key: str, p: Path | None) -> None:
        if p is not None:
            echo[key] = str(Path(p).resolve())

    put_path("train", config.train_path)
    put_path("dev", config.dev_path)
    put_path("vocab", config.vocab_path)
    put_path("out_dir", config.out_dir)
    put_path("model", config.model_path)
    put_path("pronounce", config.pronounce_path)
    put_path("misspellings", config.misspellings_path)
    echo["victim"] = config.victim
    if config.victim == "remote":
        echo["remote_kind"] = config.remote_kind
        if config.remote_argv:
            echo["remote_command"] = shlex.join(config.remote_argv)
        if config.remote_host is not None:
            echo["remote_host"] = config.remote_host
        if config.remote_port is not None:
            echo["remote_port"] = str(config.remote_port)
        echo["remote_timeout_ms"] = str(config.remote_timeout_ms)
    echo["embed_dim"] = str(hp.embed_dim)
    echo["hidden_dim"] = str(hp.hidden_dim)
    echo["learning_rate"] = repr(hp.learning_rate)
    echo["epochs"] = str(hp.epochs)
    echo["batch_size"] = str(hp.batch_size)
    echo["train_seed"] = str(hp.seed)
    echo["init_scale"] = repr(hp.init_scale)
    echo["k_values"] = ",".join(str(k) for k in config.k_values)
    echo["policies"] = ",".join(p.value for p in config.policies)
    echo["sources"] = ",".join(config.source_sets)
    echo["random_seeds"] = ",".join(str(s) for s in config.random_seeds)
    echo["allow_retarget"] = "true" if config.allow_retarget else "false"
    echo["master_seed"] = str(config.master_seed)
    if config.limit is not None:
        echo["limit"] = str(config.limit)
    echo["train_unit"] = config.train_unit
    return echo


def config_hash(config: ExperimentConfig) -> str:
    canonical = "".join(
        f"{k}={v}\n" for k, v in sorted(config_echo(config).items())
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class VictimHandle:
    """A ready victim plus the metadata reports must carry about it."""

    def __init__(self, victim: Victim, meta: dict, close: Callable[[], None] | None = None):
        self.victim = victim
        self.meta = meta
        self._close = close

    def close(self) -> None:
        if self._close is not None:
            self._close()


def _require(value, key: str):
    if value is None:
        raise UsageError(f"config key {key!r} is required for this command")
    return value


def _build_builtin(config: ExperimentConfig) -> VictimHandle:
    vocab = load_vocab(_require(config.vocab_path, "vocab"))
    model = None
    if config.model_path is not None and Path(config.model_path).exists():
        model = load_model(config.model_path, vocab)
        trained_on = f"checkpoint:{config.model_path}"
    if model is None:
        train_corpus = load_tsv_corpus(_require(config.train_path, "train"))
        model = train(list(train_corpus.examples), vocab, config.hyperparams)
        trained_on = train_corpus.name
        if config.model_path is not None:
            Path(config.model_path).parent.mkdir(parents=True, exist_ok=True)
            model.save(config.model_path)
    meta = {
        "victim": "builtin",
        "num_classes": model.num_classes,
        "hyperparams": model.hp.to_dict(),
        "train_accuracy": model.train_accuracy,
        "trained_on": trained_on,
        "train_unit": config.train_unit,
        "vocab_sha256": vocab.sha256,
    }
    return VictimHandle(model, meta)


def _build_remote(config: ExperimentConfig) -> VictimHandle:
    try:
        endpoint = VictimEndpoint(
            config.remote_kind,
            argv=config.remote_argv or None,
            host=config.remote_host,
            port=config.remote_port,
            timeout_ms=config.remote_timeout_ms,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    victim = RemoteVictim.connect(endpoint)  # fails fast before any attack
    caps = victim.handshake()
    if not caps.supports_gradients:
        gradient_bound = [p.value for p in config.policies if p is not PolicyKind.RANDOM]
        if gradient_bound:
            victim.close()
            raise RemoteVictimError(
                f"server does not expose gradients; policies {gradient_bound} "
                "cannot run against it (only random can)"
            )
    meta = {
        "victim": "remote",
        "num_classes": caps.num_classes,
        "tokenizer_id": caps.tokenizer_id,
        "supports_gradients": caps.supports_gradients,
        "endpoint": config.remote_kind,
        "vocab_sha256": None,
    }
    if config.vocab_path is not None:
        meta["vocab_sha256"] = load_vocab(config.vocab_path).sha256
    return VictimHandle(victim, meta, close=victim.close)


def resolve_victim(config: ExperimentConfig) -> VictimHandle:
    if config.victim == "builtin":
        return _build_builtin(config)
    return _build_remote(config)


def load_dev(config: ExperimentConfig) -> Corpus:
    corpus = load_tsv_corpus(_require(config.dev_path, "dev"))
    if config.limit is not None and config.limit < len(corpus.examples):
        corpus = dataclasses.replace(corpus, examples=corpus.examples[: config.limit])
    return corpus


def _check_labels(corpus: Corpus, num_classes: int) -> None:
    if corpus.num_classes > num_classes:
        raise DataError(
            f"corpus {corpus.name} has labels up to {corpus.num_classes - 1} "
            f"but the victim serves {num_classes} classes"
        )


def load_tables(
    config: ExperimentConfig,
) -> dict[TypoSource, SubstitutionTable]:
    return load_typo_tables(config.pronounce_path, config.misspellings_path)


def report_meta(
    config: ExperimentConfig, handle: VictimHandle, corpus: Corpus
) -> dict:
    return {
        "tool": "typoattack",
        "config": config_echo(config),
        "config_sha256": config_hash(config),
        "master_seed": config.master_seed,
        "vocab_sha256": handle.meta.get("vocab_sha256"),
        "corpus": {"name": corpus.name, "size": len(corpus.examples)},
        "victim": handle.meta,
    }


def _pct(value: float) -> str:
    return f"{100.0 * value:.1f}"


def write_sweep_tsv(path: Path, report: SweepReport, meta: dict) -> None:
    lines = [
        "# typoattack sweep report",
        f"# config_sha256={meta['config_sha256']}",
        f"# master_seed={meta['master_seed']}",
        f"# vocab_sha256={meta['vocab_sha256']}",
        f"# corpus={meta['corpus']['name']}\tsize={meta['corpus']['size']}",
        "policy\tsources\tk\truns\texamples\taccuracy_pct\tstd_pct\tflip_rate_pct",
    ]
    for cell in report.cells:
        lines.append(
            "\t".join(
                (
                    cell.policy,
                    cell.source_set,
                    str(cell.budget),
                    str(cell.n_runs),
                    str(cell.examples_attacked),
                    _pct(cell.mean_accuracy),
                    _pct(cell.std_accuracy),
                    _pct(cell.mean_flip_rate),
                )
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_sweep_json(path: Path, report: SweepReport, meta: dict) -> None:
    payload = {
        "meta": meta,
        "k_values": list(report.k_values),
        "policies": list(report.policies),
        "source_sets": list(report.source_sets),
        "random_seeds": list(report.random_seeds),
        "corpus_size": report.corpus_size,
        "cells": [dataclasses.asdict(cell) for cell in report.cells],
    }
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_transcripts(path: Path, runs: Sequence[SweepRun]) -> None:
    """One JSON line per attacked example, full iteration detail."""
    with open(path, "w", encoding="utf-8") as f:
        for run in runs:
            for outcome in run.report.outcomes:
                row = {
                    "policy": run.policy.value,
                    "sources": run.source_set,
                    "seed": run.seed,
                    "budget": run.budget,
                    "example_index": outcome.index,
                    "gold": outcome.example.label,
                    "original_text": outcome.example.text,
                    "attacked": outcome.attacked,
                    "final_text": outcome.final_text,
                    "success_iteration": outcome.success_iteration,
                    "victim_error": outcome.victim_error,
                    "records": [
                        dataclasses.asdict(rec) for rec in outcome.result.transcript
                    ]
                    if outcome.result is not None
                    else [],
                }
                f.write(json.dumps(row, sort_keys=True) + "\n")


def emit_plot_data(report: SweepReport, directory: Path) -> tuple[Path, ...]:
    """One (k, accuracy, std) series file per policy/source curve."""
    directory.mkdir(parents=True, exist_ok=True)
    by_curve: dict[tuple[str, str], list] = {}
    for cell in report.cells:
        by_curve.setdefault((cell.policy, cell.source_set), []).append(cell)
    paths = []
    for (policy, source), cells in by_curve.items():
        path = directory / f"{policy}_{source}.tsv"
        lines = ["k\taccuracy\tstd"]
        for cell in sorted(cells, key=lambda c: c.budget):
            lines.append(f"{cell.budget}\t{cell.mean_accuracy!r}\t{cell.std_accuracy!r}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return tuple(paths)


@dataclass(frozen=True)
class ExperimentArtifacts:
    report: SweepReport
    sweep_json: Path
    sweep_tsv: Path
    transcripts: Path
    plot_files: tuple[Path, ...]


def run_experiment(config: ExperimentConfig) -> ExperimentArtifacts:
    """Full sweep: build victim, attack the dev corpus, write all reports."""
    corpus = load_dev(config)
    tables = load_tables(config)
    handle = resolve_victim(config)
    try:
        _check_labels(corpus, handle.meta["num_classes"])
        ks = config.k_values
        kmax = ks[-1] if ks[-1] > 0 else 1
        presets = {name: SOURCE_SET_PRESETS[name] for name in config.source_sets}
        runs = sweep_runs(
            handle.victim, corpus.examples, kmax, config.policies, presets,
            random_seeds=config.random_seeds,
            allow_retarget=config.allow_retarget,
            tables=tables,
        )
        report = SweepReport(
            cells=summarize_runs(runs, ks, len(corpus.examples)),
            corpus_size=len(corpus.examples),
            k_values=ks,
            policies=tuple(p.value for p in config.policies),
            source_sets=config.source_sets,
            random_seeds=config.random_seeds,
        )
        meta = report_meta(config, handle, corpus)
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        sweep_json = out / "sweep.json"
        sweep_tsv = out / "sweep.tsv"
        transcripts = out / "transcripts.jsonl"
        write_sweep_json(sweep_json, report, meta)
        write_sweep_tsv(sweep_tsv, report, meta)
        write_transcripts(transcripts, runs)
        plots = emit_plot_data(report, out / "plots")
        return ExperimentArtifacts(report, sweep_json, sweep_tsv, transcripts, plots)
    finally:
        handle.close()


@dataclass(frozen=True)
class TransferCell:
    policy: str
    source_set: str
    budget: int
    self_accuracy: float
    transfer_accuracy: float
    n_runs: int


@dataclass(frozen=True)
class TransferArtifacts:
    cells: tuple[TransferCell, ...]
    clean_accuracy_a: float
    clean_accuracy_b: float
    transfer_json: Path
    transfer_tsv: Path


def run_transfer(config: ExperimentConfig, seed_b: int) -> TransferArtifacts:
    """Attacks victim A, then scores a reseeded victim B on A's outputs.

    Budget-k adversarial texts come from transcript prefixes of the
    full-budget runs, so A's per-cell self accuracy matches the sweep.
    """
    if config.victim != "builtin":
        raise UsageError("transfer runs need the builtin victim on both sides")
    corpus = load_dev(config)
    tables = load_tables(config)
    handle = resolve_victim(config)
    model_a = handle.victim
    _check_labels(corpus, handle.meta["num_classes"])
    hp_b = dataclasses.replace(config.hyperparams, seed=seed_b)
    vocab = load_vocab(_require(config.vocab_path, "vocab"))
    train_corpus = load_tsv_corpus(_require(config.train_path, "train"))
    model_b = train(list(train_corpus.examples), vocab, hp_b)

    def clean_accuracy(model: BuiltinModel) -> float:
        return transfer_eval(
            ((ex.text, ex.label) for ex in corpus.examples), model
        )

    clean_a = clean_accuracy(model_a)
    clean_b = clean_accuracy(model_b)
    ks = config.k_values
    kmax = ks[-1] if ks[-1] > 0 else 1
    presets = {name: SOURCE_SET_PRESETS[name] for name in config.source_sets}
    runs = sweep_runs(
        model_a, corpus.examples, kmax, config.policies, presets,
        random_seeds=config.random_seeds,
        allow_retarget=config.allow_retarget,
        tables=tables,
    )
    by_point: dict[tuple[str, str], list[SweepRun]] = {}
    for run in runs:
        by_point.setdefault((run.policy.value, run.source_set), []).append(run)
    cells = []
    for (policy, source), group in by_point.items():
        for k in ks:
            selves, crosses = [], []
            for run in group:
                pairs = run.report.examples_after(k)
                selves.append(transfer_eval(pairs, model_a))
                crosses.append(transfer_eval(pairs, model_b))
            cells.append(
                TransferCell(
                    policy, source, k,
                    sum(selves) / len(selves),
                    sum(crosses) / len(crosses),
                    len(group),
                )
            )
    meta = report_meta(config, handle, corpus)
    meta["transfer_seed_b"] = seed_b
    meta["clean_accuracy_a"] = clean_a
    meta["clean_accuracy_b"] = clean_b
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tj = out / "transfer.json"
    tt = out / "transfer.tsv"
    tj.write_text(
        json.dumps(
            {"meta": meta, "cells": [dataclasses.asdict(c) for c in cells]},
            indent=2, sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    lines = [
        "# typoattack transfer report",
        f"# config_sha256={meta['config_sha256']}",
        f"# master_seed={meta['master_seed']}",
        f"# vocab_sha256={meta['vocab_sha256']}",
        f"# corpus={meta['corpus']['name']}\tsize={meta['corpus']['size']}",
        f"# seed_b={seed_b}\tclean_a_pct={_pct(clean_a)}\tclean_b_pct={_pct(clean_b)}",
        "policy\tsources\tk\truns\tself_pct\ttransfer_pct",
    ]
    for cell in cells:
        lines.append(
            "\t".join(
                (
                    cell.policy, cell.source_set, str(cell.budget),
                    str(cell.n_runs),
                    _pct(cell.self_accuracy), _pct(cell.transfer_accuracy),
                )
            )
        )
    tt.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return TransferArtifacts(tuple(cells), clean_a, clean_b, tj, tt)
