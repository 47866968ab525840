"""CLI surface: subcommands, JSON output, exit codes."""

import json
import pathlib

import pytest
from click.testing import CliRunner

from cfgmask import brute_force_mask, mask_to_hex
from cfgmask.cli import main

from oracles import synthetic_vocab

ROOT = pathlib.Path(__file__).resolve().parent.parent
JSON_CFG = str(ROOT / "grammars" / "json.cfg")
ADDITION_CFG = str(ROOT / "grammars" / "addition.cfg")


@pytest.fixture(scope="module")
def vocab_file(tmp_path_factory):
    vocab = synthetic_vocab(seed=2, size=64, alphabet=b'{}[]:,"01ab')
    path = tmp_path_factory.mktemp("vocab") / "vocab.json"
    path.write_text(vocab.to_json())
    return str(path), vocab


def run(*args):
    return CliRunner().invoke(main, list(args))


def last_json(result):
    return json.loads(result.output.strip().splitlines()[-1])


def test_validate_accept():
    res = run("validate", "--grammar", JSON_CFG, "--input", '{"a":1}')
    assert res.exit_code == 0
    obj = last_json(res)
    assert obj["accepted"] is True
    assert obj["consumed"] == 7
    assert obj["rejected_at"] is None
    assert len(obj["live_items"]) == 7


def test_validate_reject_midway():
    res = run("validate", "--grammar", JSON_CFG, "--input", '{"a":,')
    assert res.exit_code == 1
    obj = last_json(res)
    assert obj["accepted"] is False
    assert obj["rejected_at"] == 5
    assert obj["consumed"] == 5


def test_validate_incomplete_prefix_rejected():
    res = run("validate", "--grammar", JSON_CFG, "--input", '{"a":')
    assert res.exit_code == 1
    assert last_json(res)["rejected_at"] is None


def test_validate_hex_input():
    res = run("validate", "--grammar", JSON_CFG, "--input-hex", "7b7d")  # {}
    assert res.exit_code == 0


def test_validate_missing_grammar_file():
    res = run("validate", "--grammar", "/nonexistent.cfg", "--input", "x")
    assert res.exit_code == 2


def test_validate_bad_hex():
    res = run("validate", "--grammar", JSON_CFG, "--input-hex", "zz")
    assert res.exit_code == 2


def test_mask_matches_library(vocab_file):
    path, vocab = vocab_file
    res = run("mask", "--grammar", JSON_CFG, "--vocab", path, "--prefix", '{"a":')
    assert res.exit_code == 0
    obj = last_json(res)
    from cfgmask import Engine, parse_grammar, transform

    g = transform(parse_grammar(pathlib.Path(JSON_CFG).read_text()))
    eng = Engine(g)
    eng.feed(b'{"a":')
    expected = brute_force_mask(eng, vocab)
    assert obj["mask_hex"] == mask_to_hex(expected, vocab.size)
    assert obj["allowed"] == bin(expected).count("1")
    assert obj["accepting"] is False
    assert len(obj["fingerprint"]) == 32


def test_mask_empty_prefix_default(vocab_file):
    path, _ = vocab_file
    res = run("mask", "--grammar", JSON_CFG, "--vocab", path)
    assert res.exit_code == 0
    assert last_json(res)["allowed"] > 0


def test_mask_invalid_prefix_exit_code(vocab_file):
    path, _ = vocab_file
    res = run("mask", "--grammar", JSON_CFG, "--vocab", path, "--prefix", "}}")
    assert res.exit_code == 3


def test_mask_ablation_flags_identical_bits(vocab_file):
    path, _ = vocab_file
    base = last_json(run("mask", "--grammar", JSON_CFG, "--vocab", path, "--prefix", "[1,"))
    for flag in ("--no-prune", "--no-ci-cache", "--no-trie", "--no-state-cache"):
        res = run("mask", "--grammar", JSON_CFG, "--vocab", path, "--prefix", "[1,", flag)
        assert res.exit_code == 0
        assert last_json(res)["mask_hex"] == base["mask_hex"], flag


def test_decode_trace_and_terminal_record(vocab_file):
    path, vocab = vocab_file
    res = run("decode", "--grammar", JSON_CFG, "--vocab", path, "--seed", "3", "--max-steps", "80")
    assert res.exit_code == 0
    lines = [json.loads(line) for line in res.output.strip().splitlines()]
    final = lines[-1]
    assert final["status"] == "ok"
    assert final["accepting"] is True
    steps = lines[:-1]
    assert steps and all({"step", "fingerprint", "token_id", "allowed"} <= set(s) for s in steps)
    text = bytes.fromhex(final["output_hex"])
    assert b"".join(vocab.tokens[s["token_id"]] for s in steps) == text


def test_decode_deterministic(vocab_file):
    path, _ = vocab_file
    a = run("decode", "--grammar", JSON_CFG, "--vocab", path, "--seed", "5")
    b = run("decode", "--grammar", JSON_CFG, "--vocab", path, "--seed", "5")
    assert a.output == b.output


def test_decode_dead_end_exit_code(tmp_path):
    # vocabulary that cannot express any sentence of the grammar
    from cfgmask import Vocabulary

    vocab = Vocabulary(tokens=[b"", b"z"], eos_id=0)
    vp = tmp_path / "v.json"
    vp.write_text(vocab.to_json())
    res = run("decode", "--grammar", ADDITION_CFG, "--vocab", str(vp))
    assert res.exit_code == 4
    assert json.loads(res.output.strip().splitlines()[-1])["status"] == "dead_end"


def test_bench_report_and_self_check(vocab_file):
    path, _ = vocab_file
    res = run(
        "bench",
        "--grammar", JSON_CFG,
        "--vocab", path,
        "--repeats", "2",
        "--max-steps", "40",
        "--self-check",
    )
    assert res.exit_code == 0
    obj = json.loads(res.output.strip().splitlines()[0])
    assert obj["total_steps"] > 0
    assert obj["masks_per_second"] > 0
    assert obj["config"]["prune"] is True


def test_analyze_reports_transforms():
    res = run("analyze", "--grammar", JSON_CFG)
    assert res.exit_code == 0
    obj = last_json(res)
    assert obj["rules_parsed"] > 0
    assert obj["rules_final"] > 0
    assert isinstance(obj["nullable_symbols"], list)
    forms = {r["form"] for r in obj["hrr_rules"]}
    assert forms <= {"A->c", "A->Ba", "A->eps"}
    assert "A->c" in forms  # json value rules have unit-terminal form


def test_analyze_bad_grammar(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("start ::= X;")
    res = run("analyze", "--grammar", str(p))
    assert res.exit_code == 2
