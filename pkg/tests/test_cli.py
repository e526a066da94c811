"""Command-line interface: subcommands, exit codes, stdout formats.

Commands run in-process through ``cli.main`` so stdout/stderr land in
capsys; one subprocess test proves the module entry point works.
"""

from __future__ import annotations

import io
import json
import logging
import os
import subprocess
import sys

import pytest

from idiomatize import cli, load_checkpoint
from idiomatize.pipeline import load_dataset

from conftest import write_config


@pytest.fixture(autouse=True)
def _reset_logging():
    """main() configures the root logger; un-bind captured streams after."""
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)


# ------------------------------------------------------------ exit codes

@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["train"],
        ["train", "reranker", "--data", "x", "--out", "y"],
        ["evaluate", "--config", "c", "--data", "d", "--ckpt-dir", "k", "--split", "dev"],
        ["transform", "--config", "c"],
    ],
)
def test_usage_errors_exit_one(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 1
    assert "error" in capsys.readouterr().err


def test_missing_data_file_exits_two(tmp_path, capsys):
    code = cli.main(
        [
            "ingest",
            "--lexicon", str(tmp_path / "absent.jsonl"),
            "--pairs", str(tmp_path / "absent.jsonl"),
            "--out", str(tmp_path / "ds"),
        ]
    )
    assert code == 2
    assert capsys.readouterr().err.startswith("error:")


# ---------------------------------------------------------------- ingest

def test_ingest_writes_dataset(demo_files, tmp_path):
    out = str(tmp_path / "ds")
    code = cli.main(
        [
            "--quiet",
            "ingest",
            "--lexicon", demo_files["lexicon"],
            "--pairs", demo_files["pairs"],
            "--out", out,
            "--annotated", demo_files["annotated"],
        ]
    )
    assert code == 0
    ds = load_dataset(out)
    assert ds.annotated_ids == ("mull_over", "run_for_cover")
    assert len(ds.split.validation) == 2
    assert len(ds.split.test) == 2
    assert len(ds.split.train) == 28
    assert len(ds.vocab) > 4


def test_ingest_defaults_to_all_idioms_annotated(demo_files, tmp_path):
    out = str(tmp_path / "ds")
    code = cli.main(
        [
            "--quiet",
            "ingest",
            "--lexicon", demo_files["lexicon"],
            "--pairs", demo_files["pairs"],
            "--out", out,
        ]
    )
    assert code == 0
    ds = load_dataset(out)
    assert len(ds.annotated_ids) == len(ds.lexicon)
    # Two demo idioms have three pairs (1 validation + 1 test each) and
    # eight have two pairs (1 test each); singletons stay in train.
    assert len(ds.split.validation) == 2
    assert len(ds.split.test) == 10
    assert len(ds.split.train) == 20


def test_ingest_augmented_pairs_extend_train(demo_files, tmp_path, capsys):
    out = str(tmp_path / "ds")
    code = cli.main(
        [
            "--quiet",
            "ingest",
            "--lexicon", demo_files["lexicon"],
            "--pairs", demo_files["pairs"],
            "--pairs-aug", demo_files["pairs"],
            "--out", out,
            "--annotated", demo_files["annotated"],
        ]
    )
    assert code == 0
    ds = load_dataset(out)
    assert len(ds.split.train) == 28 + 32
    assert len(ds.split.validation) == 2
    assert len(ds.split.test) == 2


def test_ingest_rejects_unknown_annotated_id(demo_files, tmp_path, capsys):
    bad = str(tmp_path / "annotated.txt")
    with open(bad, "w", encoding="utf-8") as fh:
        fh.write("mull_over\nnot_an_idiom\n")
    code = cli.main(
        [
            "ingest",
            "--lexicon", demo_files["lexicon"],
            "--pairs", demo_files["pairs"],
            "--out", str(tmp_path / "ds"),
            "--annotated", bad,
        ]
    )
    assert code == 2
    assert "not_an_idiom" in capsys.readouterr().err


# ----------------------------------------------------------------- train

def test_train_retrieval_checkpoint(demo_files, tmp_path):
    out = str(tmp_path / "nested" / "dir" / "retrieval.json")
    code = cli.main(
        [
            "--quiet",
            "train", "retrieval",
            "--data", demo_files["dataset"],
            "--out", out,
            "--epochs", "1",
            "--embed-dim", "8",
            "--hidden", "8",
            "--negatives", "3",
            "--batch", "8",
        ]
    )
    assert code == 0
    model = load_checkpoint(out)
    assert model.component == "retrieval"
    assert model.hyperparameters()["embed_dim"] == 8


def test_train_extractor_checkpoint(demo_files, tmp_path):
    out = str(tmp_path / "extractor.json")
    code = cli.main(
        [
            "--quiet",
            "train", "extractor",
            "--data", demo_files["dataset"],
            "--out", out,
            "--epochs", "1",
            "--embed-dim", "8",
            "--hidden", "8",
            "--batch", "8",
        ]
    )
    assert code == 0
    assert load_checkpoint(out).component == "extractor"


def test_train_generator_checkpoint(demo_files, tmp_path):
    out = str(tmp_path / "generator.json")
    code = cli.main(
        [
            "--quiet",
            "train", "generator",
            "--data", demo_files["dataset"],
            "--out", out,
            "--epochs", "1",
            "--hidden", "16",
            "--mode", "unguided",
            "--batch", "8",
        ]
    )
    assert code == 0
    model = load_checkpoint(out)
    assert model.component == "generator"
    assert model.guided is False
    assert model.hidden == 16


# ------------------------------------------------------------- transform

def test_transform_inline_input(config_file, demo_files, ckpt_dir, capsys):
    code = cli.main(
        [
            "--quiet",
            "transform",
            "--config", config_file,
            "--lexicon", demo_files["lexicon"],
            "--ckpt-dir", ckpt_dir,
            "--input", "He thought about the problem for a long time.",
        ]
    )
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1
    record = json.loads(lines[0])
    assert set(record) == {
        "literal", "idiom_id", "sense_index", "span", "output", "scores",
    }
    assert record["literal"][0] == "he"
    assert isinstance(record["output"], list)


def test_transform_reads_stdin_lines(
    config_file, demo_files, ckpt_dir, capsys, monkeypatch
):
    monkeypatch.setattr(
        "sys.stdin",
        io.StringIO("He ran away quickly.\n\nShe kept thinking about it.\n"),
    )
    code = cli.main(
        [
            "--quiet",
            "transform",
            "--config", config_file,
            "--lexicon", demo_files["lexicon"],
            "--ckpt-dir", ckpt_dir,
        ]
    )
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    for line in lines:
        json.loads(line)


def test_transform_is_deterministic(config_file, demo_files, ckpt_dir, capsys):
    argv = [
        "--quiet",
        "transform",
        "--config", config_file,
        "--lexicon", demo_files["lexicon"],
        "--ckpt-dir", ckpt_dir,
        "--input", "The dog ran very fast.",
    ]
    assert cli.main(argv) == 0
    first = capsys.readouterr().out
    assert cli.main(argv) == 0
    assert capsys.readouterr().out == first


def test_transform_rule_based_needs_no_generator_file(
    tiny_models, demo_files, tmp_path, capsys
):
    from idiomatize import save_checkpoint

    ckpts = tmp_path / "ckpts"
    ckpts.mkdir()
    save_checkpoint(tiny_models["retrieval"], str(ckpts / "retrieval.json"))
    save_checkpoint(tiny_models["extractor"], str(ckpts / "extractor.json"))
    config = write_config(str(tmp_path / "c.json"), generator_mode="rule_based")
    code = cli.main(
        [
            "--quiet",
            "transform",
            "--config", config,
            "--lexicon", demo_files["lexicon"],
            "--ckpt-dir", str(ckpts),
            "--input", "He ran away quickly.",
        ]
    )
    assert code == 0
    json.loads(capsys.readouterr().out)


def test_transform_missing_generator_file_exits_two(
    tiny_models, demo_files, tmp_path, capsys
):
    from idiomatize import save_checkpoint

    ckpts = tmp_path / "ckpts"
    ckpts.mkdir()
    save_checkpoint(tiny_models["retrieval"], str(ckpts / "retrieval.json"))
    save_checkpoint(tiny_models["extractor"], str(ckpts / "extractor.json"))
    config = write_config(str(tmp_path / "c.json"))  # guided
    code = cli.main(
        [
            "transform",
            "--config", config,
            "--lexicon", demo_files["lexicon"],
            "--ckpt-dir", str(ckpts),
            "--input", "He ran away quickly.",
        ]
    )
    assert code == 2
    assert capsys.readouterr().err.startswith("error:")


def test_transform_mode_mismatch_exits_two(demo_files, ckpt_dir, tmp_path, capsys):
    config = write_config(str(tmp_path / "c.json"), generator_mode="unguided")
    code = cli.main(
        [
            "transform",
            "--config", config,
            "--lexicon", demo_files["lexicon"],
            "--ckpt-dir", ckpt_dir,
            "--input", "He ran away quickly.",
        ]
    )
    assert code == 2
    assert "guided" in capsys.readouterr().err


@pytest.mark.parametrize("content", ['{"beam": 2, "widths": 3}', "{oops"])
def test_transform_bad_config_exits_two(
    demo_files, ckpt_dir, tmp_path, capsys, content
):
    config = str(tmp_path / "c.json")
    with open(config, "w", encoding="utf-8") as fh:
        fh.write(content)
    code = cli.main(
        [
            "transform",
            "--config", config,
            "--lexicon", demo_files["lexicon"],
            "--ckpt-dir", ckpt_dir,
            "--input", "He ran away quickly.",
        ]
    )
    assert code == 2
    assert capsys.readouterr().err.startswith("error:")


# -------------------------------------------------------------- evaluate

def test_evaluate_prints_report(config_file, demo_files, ckpt_dir, capsys):
    code = cli.main(
        [
            "--quiet",
            "evaluate",
            "--config", config_file,
            "--data", demo_files["dataset"],
            "--ckpt-dir", ckpt_dir,
            "--split", "test",
        ]
    )
    assert code == 0
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["num_instances"] == 2
    assert 0.0 <= report["bleu"] <= 1.0
    assert "span_f1" in report
    assert "instances: 2" in captured.err
    assert "retrieval_acc" in captured.err


# ------------------------------------------------------------- gradcheck

def test_gradcheck_single_module(capsys):
    code = cli.main(["--quiet", "gradcheck", "--module", "extractor"])
    assert code == 0
    out = capsys.readouterr().out
    assert "extractor: max relative gradient error" in out


def test_gradcheck_strict_tolerance_exits_three(capsys):
    code = cli.main(
        ["--quiet", "gradcheck", "--module", "extractor", "--tolerance", "0"]
    )
    assert code == 3
    assert "gradcheck failed" in capsys.readouterr().err


# ------------------------------------------------------------ subprocess

def test_module_entry_point(config_file, demo_files, ckpt_dir):
    proc = subprocess.run(
        [
            sys.executable, "-m", "idiomatize.cli",
            "--quiet",
            "transform",
            "--config", config_file,
            "--lexicon", demo_files["lexicon"],
            "--ckpt-dir", ckpt_dir,
            "--input", "He ran away quickly.",
        ],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    record = json.loads(proc.stdout)
    assert record["output"]
