"""Command line surface.

Machine-readable results go to stdout as line-delimited JSON; human
diagnostics go to stderr.  Exit codes: 0 ok/accept, 1 reject, 2 input
error, 3 invalid prefix, 4 dead end.
"""

from __future__ import annotations

import json
import sys

import click

from . import decode as decode_mod
from .grammar import (
    GrammarError,
    detect_hrr_rules,
    eliminate_nullables,
    nullable_nonterminals,
    parse_grammar,
    remove_useless_rules,
    transform,
)
from .earley import Engine
from .mask import Vocabulary, mask_to_hex, popcount
from .session import MaskGenerator, SessionOptions
from .state_cache import fingerprint

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_INPUT_ERROR = 2
EXIT_INVALID_PREFIX = 3
EXIT_DEAD_END = 4


def _emit(obj: dict):
    click.echo(json.dumps(obj))


def _fail(message: str, code: int = EXIT_INPUT_ERROR):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_grammar(path: str, start: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        _fail(str(exc))
    try:
        return transform(parse_grammar(text, start=start))
    except GrammarError as exc:
        _fail(f"grammar: {exc}")


def _load_vocab(path: str) -> Vocabulary:
    try:
        with open(path, encoding="utf-8") as fh:
            return Vocabulary.from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        _fail(f"vocabulary: {exc}")


def _read_bytes(text: str | None, hex_text: str | None, file: str | None) -> bytes:
    if hex_text is not None:
        try:
            return bytes.fromhex(hex_text)
        except ValueError as exc:
            _fail(f"bad hex input: {exc}")
    if text is not None:
        return text.encode("utf-8")
    if file is not None:
        try:
            with open(file, "rb") as fh:
                return fh.read()
        except OSError as exc:
            _fail(str(exc))
    return sys.stdin.buffer.read()


def ablation_options(no_prune, no_ci_cache, no_trie, no_state_cache) -> SessionOptions:
    return SessionOptions(
        prune=not no_prune,
        ci_cache=not no_ci_cache,
        trie=not no_trie,
        state_cache=not no_state_cache,
    )


grammar_option = click.option("--grammar", "grammar_path", required=True, type=click.Path())
vocab_option = click.option("--vocab", "vocab_path", required=True, type=click.Path())
start_option = click.option("--start", default="start", show_default=True)


def ablation_flags(f):
    for flag in ("--no-state-cache", "--no-trie", "--no-ci-cache", "--no-prune"):
        f = click.option(flag, is_flag=True)(f)
    return f


@click.group()
def main():
    """Grammar-constrained decoding engine."""


@main.command()
@grammar_option
@start_option
@click.option("--input", "input_text", default=None, help="Input as a UTF-8 string.")
@click.option("--input-hex", default=None, help="Input as hex bytes.")
@click.option("--input-file", default=None, type=click.Path())
@click.option("--no-prune", is_flag=True)
def validate(grammar_path, start, input_text, input_hex, input_file, no_prune):
    """Check whether the input byte string is in the grammar's language."""
    g = _load_grammar(grammar_path, start)
    data = _read_bytes(input_text, input_hex, input_file)
    engine = Engine(g, prune=not no_prune)
    live_counts = []
    rejected_at = None
    for i, b in enumerate(data):
        if not engine.accept_byte(b):
            rejected_at = i
            break
        live_counts.append(engine.live_item_count())
    accepted = rejected_at is None and engine.is_accepting()
    _emit(
        {
            "accepted": accepted,
            "consumed": engine.consumed(),
            "rejected_at": rejected_at,
            "live_items": live_counts,
        }
    )
    sys.exit(EXIT_OK if accepted else EXIT_REJECT)


@main.command("mask")
@grammar_option
@vocab_option
@start_option
@click.option("--prefix", default=None, help="Prefix as a UTF-8 string (default: empty).")
@click.option("--prefix-hex", default=None, help="Prefix as hex bytes.")
@ablation_flags
def mask_cmd(grammar_path, vocab_path, start, prefix, prefix_hex, no_prune, no_ci_cache, no_trie, no_state_cache):
    """Emit the token mask for the state reached after the given prefix."""
    g = _load_grammar(grammar_path, start)
    vocab = _load_vocab(vocab_path)
    data = _read_bytes(prefix, prefix_hex, None) if (prefix is not None or prefix_hex is not None) else b""
    gen = MaskGenerator(g, vocab, ablation_options(no_prune, no_ci_cache, no_trie, no_state_cache))
    failed = gen.engine.feed(data)
    if failed is not None:
        click.echo(f"error: prefix rejected at byte {failed}", err=True)
        sys.exit(EXIT_INVALID_PREFIX)
    m = gen.current_mask()
    _emit(
        {
            "mask_hex": mask_to_hex(m, vocab.size),
            "allowed": popcount(m),
            "fingerprint": gen.fingerprint().hex(),
            "accepting": gen.is_accepting(),
        }
    )
    sys.exit(EXIT_OK)


@main.command("decode")
@grammar_option
@vocab_option
@start_option
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--max-steps", default=64, show_default=True, type=int)
@ablation_flags
def decode_cmd(grammar_path, vocab_path, start, seed, max_steps, no_prune, no_ci_cache, no_trie, no_state_cache):
    """Run a simulated decode, streaming one JSON trace record per step."""
    g = _load_grammar(grammar_path, start)
    vocab = _load_vocab(vocab_path)
    gen = MaskGenerator(g, vocab, ablation_options(no_prune, no_ci_cache, no_trie, no_state_cache))
    result = decode_mod.run_decode(gen, seed=seed, max_steps=max_steps)
    for step in result.steps:
        _emit(step.to_dict())
    _emit(
        {
            "status": result.status,
            "output_hex": result.output.hex(),
            "accepting": result.accepting_at_end,
        }
    )
    if result.status == decode_mod.STATUS_DEAD_END:
        sys.exit(EXIT_DEAD_END)
    if result.status == decode_mod.STATUS_MAX_STEPS and not result.accepting_at_end:
        sys.exit(EXIT_DEAD_END)
    sys.exit(EXIT_OK)


@main.command("bench")
@grammar_option
@vocab_option
@start_option
@click.option("--repeats", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--max-steps", default=128, show_default=True, type=int)
@click.option("--self-check", is_flag=True, help="Verify ablations never change mask bits.")
@ablation_flags
def bench_cmd(grammar_path, vocab_path, start, repeats, seed, max_steps, self_check, no_prune, no_ci_cache, no_trie, no_state_cache):
    """Benchmark mask throughput under the selected ablation flags."""
    g = _load_grammar(grammar_path, start)
    vocab = _load_vocab(vocab_path)
    options = ablation_options(no_prune, no_ci_cache, no_trie, no_state_cache)
    report = decode_mod.run_bench(g, vocab, options, repeats=repeats, seed=seed, max_steps=max_steps)
    _emit(report.to_dict())
    if self_check:
        base = MaskGenerator(g, vocab, SessionOptions())
        trace = decode_mod.run_decode(base, seed=seed, max_steps=max_steps)
        token_ids = [s.token_id for s in trace.steps]
        reference = None
        for opts in _ablation_grid():
            masks = decode_mod.replay_tokens(MaskGenerator(g, vocab, opts), token_ids)
            if reference is None:
                reference = masks
            elif masks != reference:
                _fail("self-check failed: ablation changed a mask bit", EXIT_INPUT_ERROR)
        click.echo(f"self-check ok over {len(token_ids)} steps", err=True)
    sys.exit(EXIT_OK)


def _ablation_grid():
    for prune in (True, False):
        for ci in (True, False):
            for trie in (True, False):
                for sc in (True, False):
                    yield SessionOptions(prune=prune, ci_cache=ci, trie=trie, state_cache=sc)


@main.command("analyze")
@grammar_option
@start_option
def analyze_cmd(grammar_path, start):
    """Report transformation effects, nullable symbols, and prunable-shape rules."""
    try:
        with open(grammar_path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        _fail(str(exc))
    try:
        g0 = parse_grammar(text, start=start)
        nullable = sorted(g0.nonterminal_names[nt] for nt in nullable_nonterminals(g0))
        g1 = remove_useless_rules(g0)
        g2 = eliminate_nullables(g1)
        g3 = remove_useless_rules(g2)
    except GrammarError as exc:
        _fail(f"grammar: {exc}")
    hrr = detect_hrr_rules(g3)
    _emit(
        {
            "rules_parsed": len(g0.productions),
            "rules_after_useless_removal": len(g1.productions),
            "rules_after_nullable_elimination": len(g2.productions),
            "rules_final": len(g3.productions),
            "nullable_symbols": nullable,
            "hrr_rules": [
                {"rule": g3.format_production(pid), "form": tag} for pid, tag in hrr
            ],
        }
    )
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
