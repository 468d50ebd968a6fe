"""Command-line front end.

Subcommands: train, attack (one sentence, prints the transcript), sweep,
transfer, report. Exit codes: 0 success, 1 usage error, 2 data error,
3 remote-victim error. TYPOATTACK_OUT_DIR overrides the configured
output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .attack import AttackConfig, AttackPolicy, PolicyKind, SOURCE_SET_PRESETS, attack
from .data import load_tsv_corpus
from .errors import DataError, RemoteVictimError, UsageError
from .experiment import (
    ExperimentConfig,
    apply_overrides,
    load_dev,
    load_tables,
    parse_config_file,
    resolve_victim,
    run_experiment,
    run_transfer,
)
from .victim import LabeledExample, train as train_model
from .wordpiece import load_vocab

OUT_DIR_ENV = "TYPOATTACK_OUT_DIR"


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    config = parse_config_file(args.config)
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    if overrides:
        config = apply_overrides(config, overrides)
    env_out = os.environ.get(OUT_DIR_ENV)
    if env_out:
        config = dataclasses.replace(config, out_dir=Path(env_out))
    return config


def cmd_train(args: argparse.Namespace) -> int:
    config = _build_config(args)
    if config.victim != "builtin":
        raise UsageError("train only applies to the builtin victim")
    if config.vocab_path is None or config.train_path is None:
        raise UsageError("train needs the vocab and train config keys")
    vocab = load_vocab(config.vocab_path)
    corpus = load_tsv_corpus(config.train_path)
    model = train_model(list(corpus.examples), vocab, config.hyperparams)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = config.model_path or out / "model.ckpt"
    Path(target).parent.mkdir(parents=True, exist_ok=True)
    model.save(target)
    print(f"trained on {corpus.name} ({len(corpus.examples)} examples, "
          f"{config.train_unit} level)")
    print(f"train accuracy: {model.train_accuracy:.4f}")
    if config.dev_path is not None:
        dev = load_dev(config)
        correct = sum(
            model.predict(ex.text).label == ex.label for ex in dev.examples
        )
        print(f"dev accuracy: {correct / len(dev.examples):.4f}")
    print(f"checkpoint: {target}")
    return 0


def cmd_attack(args: argparse.Namespace) -> int:
    config = _build_config(args)
    handle = resolve_victim(config)
    try:
        victim = handle.victim
        num_classes = handle.meta["num_classes"]
        if not 0 <= args.gold < num_classes:
            raise UsageError(
                f"gold label {args.gold} outside the victim's {num_classes} classes"
            )
        sources = SOURCE_SET_PRESETS[args.sources]
        policy_kind = PolicyKind(args.policy)
        seed = args.seed
        if policy_kind is PolicyKind.RANDOM and seed is None:
            seed = config.random_seeds[0]
        policy = AttackPolicy(
            policy_kind, rng_seed=seed if policy_kind is PolicyKind.RANDOM else None
        )
        attack_config = AttackConfig(
            args.budget, policy, sources, allow_retarget=config.allow_retarget
        )
        prediction = victim.predict(args.text)
        print(f"prediction: {prediction.label} "
              f"(p={prediction.probs[prediction.label]:.4f}), gold: {args.gold}")
        if prediction.label != args.gold:
            print("victim already misclassifies this sentence; nothing to attack")
            return 0
        example = LabeledExample(args.text, args.gold)
        result = attack(victim, example, attack_config, tables=load_tables(config))
        for i, rec in enumerate(result.transcript, start=1):
            if rec.exhausted:
                print(f"[{i}] no eligible word or candidate left; giving up")
                continue
            verdict = "FLIP" if rec.flipped else f"p(gold) -> {1.0 - rec.score:.4f}"
            print(f"[{i}] word {rec.word_index} {rec.word_text!r} -> "
                  f"{rec.chosen_variant!r} ({rec.candidate_count} candidates) {verdict}")
        if result.success:
            print(f"success: label {result.original_prediction.label} -> "
                  f"{result.adversarial_label} after {len(result.transcript)} edit(s)")
        else:
            print("no flip within budget")
        print(f"adversarial text: {result.final_text}")
        return 0
    finally:
        handle.close()


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args)
    artifacts = run_experiment(config)
    report = artifacts.report
    print(f"swept {report.corpus_size} examples: "
          f"{len(report.policies)} policies x {len(report.source_sets)} source sets "
          f"x K in {list(report.k_values)}")
    clean = next((c for c in report.cells if c.budget == 0), None)
    if clean is not None:
        print(f"clean accuracy: {100 * clean.mean_accuracy:.1f}%")
    worst = min(report.cells, key=lambda c: c.mean_accuracy)
    print(f"lowest cell: {worst.policy}/{worst.source_set} K={worst.budget} "
          f"at {100 * worst.mean_accuracy:.1f}%")
    for path in (artifacts.sweep_tsv, artifacts.sweep_json, artifacts.transcripts):
        print(f"wrote {path}")
    print(f"wrote {len(artifacts.plot_files)} plot series under "
          f"{artifacts.plot_files[0].parent}")
    return 0


def cmd_transfer(args: argparse.Namespace) -> int:
    config = _build_config(args)
    artifacts = run_transfer(config, args.seed_b)
    print(f"clean accuracy: A {100 * artifacts.clean_accuracy_a:.1f}%, "
          f"B {100 * artifacts.clean_accuracy_b:.1f}% (seed {args.seed_b})")
    attacked = [c for c in artifacts.cells if c.budget > 0]
    if attacked:
        worst = min(attacked, key=lambda c: c.transfer_accuracy)
        print(f"strongest transfer: {worst.policy}/{worst.source_set} "
              f"K={worst.budget} drops B to {100 * worst.transfer_accuracy:.1f}%")
    print(f"wrote {artifacts.transfer_tsv}")
    print(f"wrote {artifacts.transfer_json}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.sweep_json)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        meta = payload["meta"]
        cells = payload["cells"]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: not a sweep report ({exc})") from exc
    print(f"corpus: {meta['corpus']['name']} ({meta['corpus']['size']} examples)")
    print(f"master seed: {meta['master_seed']}")
    print(f"config sha256: {meta['config_sha256']}")
    print(f"vocab sha256: {meta['vocab_sha256']}")
    print("policy\tsources\tk\taccuracy_pct\tstd_pct")
    for cell in cells:
        print(f"{cell['policy']}\t{cell['source_set']}\t{cell['budget']}\t"
              f"{100 * cell['mean_accuracy']:.1f}\t{100 * cell['std_accuracy']:.1f}")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="typoattack",
        description="Keyboard-typo adversarial attacks on text classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key")

    p_train = sub.add_parser("train", help="train the builtin victim and save it")
    with_config(p_train)
    p_train.set_defaults(func=cmd_train)

    p_attack = sub.add_parser("attack", help="attack one sentence, print transcript")
    with_config(p_attack)
    p_attack.add_argument("text", help="sentence to attack")
    p_attack.add_argument("--gold", type=int, required=True, help="true label")
    p_attack.add_argument("--policy", default="max-grad",
                          choices=[p.value for p in PolicyKind])
    p_attack.add_argument("--sources", default="all",
                          choices=sorted(SOURCE_SET_PRESETS))
    p_attack.add_argument("--budget", type=int, default=5)
    p_attack.add_argument("--seed", type=int, default=None,
                          help="seed for the random policy")
    p_attack.set_defaults(func=cmd_attack)

    p_sweep = sub.add_parser("sweep", help="run the configured sweep, write reports")
    with_config(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_transfer = sub.add_parser("transfer",
                                help="score a reseeded victim on adversarial texts")
    with_config(p_transfer)
    p_transfer.add_argument("--seed-b", type=int, required=True,
                            help="training seed for the second victim")
    p_transfer.set_defaults(func=cmd_transfer)

    p_report = sub.add_parser("report", help="print a saved sweep report")
    p_report.add_argument("sweep_json", help="path to sweep.json")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RemoteVictimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
