"""Keyboard-constrained adversarial typo attacks on text classifiers.

The package models physically plausible keyboard typos, segments text the
way an uncased subword classifier sees it, trains a small built-in victim
with analytic gradients, and runs budgeted greedy attacks, robustness
sweeps, and transfer evaluations against built-in or remote victims.
"""

from .attack import (
    AttackConfig,
    AttackPolicy,
    AttackResult,
    CorpusAttackReport,
    DEFAULT_RANDOM_SEEDS,
    PolicyKind,
    SOURCE_SET_PRESETS,
    SweepCell,
    SweepReport,
    attack,
    attack_corpus,
    select_target,
    sweep,
    transfer_eval,
)
from .data import (
    Corpus,
    load_misspellings,
    load_pronounce_table,
    load_tsv_corpus,
    load_typo_tables,
    save_tsv_corpus,
)
from .errors import (
    DataError,
    PayloadError,
    ProtocolError,
    RemoteVictimError,
    TypoAttackError,
    UsageError,
    VictimQueryError,
)
from .experiment import (
    ExperimentConfig,
    emit_plot_data,
    parse_config_file,
    run_experiment,
    run_transfer,
)
from .keyboard import (
    KeyboardLayout,
    SubstitutionTable,
    TypoCandidate,
    TypoSource,
    default_layout,
    keyboard_typo,
    neighbors,
)
from .remote import RemoteVictim, VictimEndpoint
from .victim import (
    BuiltinModel,
    Hyperparams,
    LabeledExample,
    Prediction,
    SaliencyView,
    finite_diff_check,
    load_model,
    train,
)
from .wordpiece import Segmentation, Vocab, load_vocab, tokenize

__all__ = [
    "AttackConfig",
    "AttackPolicy",
    "AttackResult",
    "BuiltinModel",
    "Corpus",
    "CorpusAttackReport",
    "DEFAULT_RANDOM_SEEDS",
    "DataError",
    "ExperimentConfig",
    "Hyperparams",
    "KeyboardLayout",
    "LabeledExample",
    "PayloadError",
    "PolicyKind",
    "Prediction",
    "ProtocolError",
    "RemoteVictim",
    "RemoteVictimError",
    "SOURCE_SET_PRESETS",
    "SaliencyView",
    "Segmentation",
    "SubstitutionTable",
    "SweepCell",
    "SweepReport",
    "TypoAttackError",
    "TypoCandidate",
    "TypoSource",
    "UsageError",
    "VictimEndpoint",
    "VictimQueryError",
    "Vocab",
    "attack",
    "attack_corpus",
    "default_layout",
    "emit_plot_data",
    "finite_diff_check",
    "keyboard_typo",
    "load_misspellings",
    "load_model",
    "load_pronounce_table",
    "load_tsv_corpus",
    "load_typo_tables",
    "load_vocab",
    "neighbors",
    "parse_config_file",
    "run_experiment",
    "run_transfer",
    "save_tsv_corpus",
    "select_target",
    "sweep",
    "tokenize",
    "train",
    "transfer_eval",
]
