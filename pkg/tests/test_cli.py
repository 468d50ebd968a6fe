"""Command-line behavior: subcommands, exit codes, env overrides."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from typoattack.cli import main
from typoattack.data import load_tsv_corpus
from typoattack.victim import train
from typoattack.wordpiece import load_vocab

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Config file plus a pretrained checkpoint the subcommands share."""
    tmp = tmp_path_factory.mktemp("cli")
    checkpoint = tmp / "model.ckpt"
    vocab = load_vocab(DATA / "wordpiece_vocab.txt")
    corpus = load_tsv_corpus(DATA / "sentiment_train.tsv")
    train(list(corpus.examples), vocab).save(checkpoint)
    cfg = tmp / "exp.cfg"
    cfg.write_text(
        "\n".join(
            [
                f"train = {DATA / 'sentiment_train.tsv'}",
                f"dev = {DATA / 'sentiment_dev.tsv'}",
                f"vocab = {DATA / 'wordpiece_vocab.txt'}",
                f"model = {checkpoint}",
                f"out_dir = {tmp / 'out'}",
                "k_values = 0,1",
                "policies = max-grad",
                "sources = mistype",
                "limit = 15",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return tmp


def cfg_of(workdir) -> str:
    return str(workdir / "exp.cfg")


class TestTrain:
    def test_writes_checkpoint_and_reports_accuracy(self, tmp_path, capsys):
        cfg = tmp_path / "train.cfg"
        cfg.write_text(
            "\n".join(
                [
                    f"train = {DATA / 'sentiment_train.tsv'}",
                    f"dev = {DATA / 'sentiment_dev.tsv'}",
                    f"vocab = {DATA / 'wordpiece_vocab.txt'}",
                    f"out_dir = {tmp_path / 'out'}",
                    "limit = 25",
                    "epochs = 30",
                ]
            )
            + "\n",
            encoding="utf-8",
        )
        assert main(["train", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "train accuracy" in out
        assert "dev accuracy" in out
        assert (tmp_path / "out" / "model.ckpt").exists()

    def test_remote_victim_rejected(self, workdir, capsys):
        code = main(["train", "--config", cfg_of(workdir),
                     "--set", "victim=remote"])
        assert code == 1
        assert "builtin" in capsys.readouterr().err


class TestAttack:
    def test_prints_transcript(self, workdir, capsys):
        code = main([
            "attack", "--config", cfg_of(workdir), "--gold", "0",
            "--budget", "3", "the film is dull and lifeless",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "prediction: 0" in out
        assert "[1] word" in out
        assert "adversarial text:" in out

    def test_initially_misclassified_is_reported_not_attacked(self, workdir, capsys):
        code = main([
            "attack", "--config", cfg_of(workdir), "--gold", "1",
            "the film is dull and lifeless",
        ])
        assert code == 0
        assert "already misclassifies" in capsys.readouterr().out

    def test_gold_out_of_range(self, workdir, capsys):
        code = main([
            "attack", "--config", cfg_of(workdir), "--gold", "7", "fine work",
        ])
        assert code == 1
        assert "classes" in capsys.readouterr().err

    def test_random_policy_defaults_to_configured_seed(self, workdir, capsys):
        code = main([
            "attack", "--config", cfg_of(workdir), "--gold", "0",
            "--policy", "random", "the film is dull and lifeless",
        ])
        assert code == 0


class TestSweepCommand:
    def test_writes_reports(self, workdir, capsys):
        assert main(["sweep", "--config", cfg_of(workdir)]) == 0
        out = capsys.readouterr().out
        assert "clean accuracy" in out
        assert (workdir / "out" / "sweep.tsv").exists()
        assert (workdir / "out" / "sweep.json").exists()

    def test_env_var_overrides_out_dir(self, workdir, tmp_path, monkeypatch):
        monkeypatch.setenv("TYPOATTACK_OUT_DIR", str(tmp_path / "envout"))
        assert main(["sweep", "--config", cfg_of(workdir)]) == 0
        assert (tmp_path / "envout" / "sweep.tsv").exists()

    def test_set_overrides_apply(self, workdir, tmp_path, capsys):
        code = main([
            "sweep", "--config", cfg_of(workdir),
            "--set", "limit=8", "--set", f"out_dir={tmp_path / 'o2'}",
        ])
        assert code == 0
        meta = json.loads((tmp_path / "o2" / "sweep.json").read_text())["meta"]
        assert meta["corpus"]["size"] == 8

    def test_bad_set_syntax(self, workdir, capsys):
        assert main(["sweep", "--config", cfg_of(workdir), "--set", "limit"]) == 1

    def test_unknown_config_key_is_usage_error(self, workdir, capsys):
        code = main(["sweep", "--config", cfg_of(workdir), "--set", "nope=1"])
        assert code == 1
        assert "nope" in capsys.readouterr().err


class TestTransferCommand:
    def test_runs_and_reports(self, workdir, capsys):
        code = main([
            "transfer", "--config", cfg_of(workdir), "--seed-b", "99",
            "--set", "limit=10",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "clean accuracy" in out
        assert (workdir / "out" / "transfer.tsv").exists()


class TestReportCommand:
    def test_prints_saved_sweep(self, workdir, capsys):
        assert main(["sweep", "--config", cfg_of(workdir)]) == 0
        capsys.readouterr()
        assert main(["report", str(workdir / "out" / "sweep.json")]) == 0
        out = capsys.readouterr().out
        assert "corpus: sentiment_dev" in out
        assert "max-grad\tmistype\t0" in out

    def test_garbage_input_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{", encoding="utf-8")
        assert main(["report", str(bad)]) == 2

    def test_missing_file_is_data_error(self, tmp_path):
        assert main(["report", str(tmp_path / "nope.json")]) == 2


class TestExitCodes:
    def test_missing_subcommand(self):
        assert main([]) == 1

    def test_unknown_subcommand(self):
        assert main(["explode"]) == 1

    def test_missing_config_flag(self):
        assert main(["sweep"]) == 1

    def test_missing_data_file(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            f"train = {tmp_path / 'missing.tsv'}\n"
            f"dev = {tmp_path / 'missing.tsv'}\n"
            f"vocab = {DATA / 'wordpiece_vocab.txt'}\n"
            f"out_dir = {tmp_path / 'out'}\n",
            encoding="utf-8",
        )
        assert main(["sweep", "--config", str(cfg)]) == 2

    def test_unreachable_remote_victim(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            f"dev = {DATA / 'sentiment_dev.tsv'}\n"
            "victim = remote\n"
            "remote_kind = stdio-subprocess\n"
            "remote_command = /nonexistent/victim-server\n"
            f"out_dir = {tmp_path / 'out'}\n"
            "policies = random\n"
            "limit = 5\n",
            encoding="utf-8",
        )
        assert main(["sweep", "--config", str(cfg)]) == 3

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
