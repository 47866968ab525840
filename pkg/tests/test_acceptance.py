"""Acceptance suite: one printed pass/fail line per criterion.

Each criterion is a single test; the summary line goes to the real stdout
so it survives pytest capture.  Criterion 9 (bindings parity) lives in the
frontend package's test suite and is reported there.
"""

import itertools
import pathlib

from cfgmask import (
    Engine,
    Item,
    MaskCache,
    MaskGenerator,
    SessionOptions,
    Vocabulary,
    brute_force_mask,
    compute_mask,
    eliminate_nullables,
    fingerprint,
    parse_grammar,
    remove_useless_rules,
    transform,
)
from cfgmask.decode import replay_tokens, run_bench, run_decode

from oracles import (
    all_strings,
    engine_accepts,
    language_upto,
    sample_transformable_grammars,
    synthetic_vocab,
)

ROOT = pathlib.Path(__file__).resolve().parent.parent


def report(capsys, number: int, ok: bool, detail: str):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


def load(name: str):
    return transform(parse_grammar((ROOT / "grammars" / name).read_text()))


def all_configs():
    for prune, ci, trie, sc in itertools.product((True, False), repeat=4):
        yield SessionOptions(prune=prune, ci_cache=ci, trie=trie, state_cache=sc)


def test_criterion_1_mask_oracle_equivalence(capsys):
    """compute_mask == brute force bit-for-bit, every ablation subset,
    >= 100 randomized decode steps per grammar, 256-token vocabulary."""
    cases = [
        ("json.cfg", b'{}[]:,"0123abtrue'),
        ("addition.cfg", b"a+bcd"),
        ("aplus.cfg", b"a"),
    ]
    total_checked = 0
    for name, alphabet in cases:
        grammar = load(name)
        vocab = synthetic_vocab(seed=29, size=256, alphabet=alphabet)
        episodes: list[list[int]] = []
        steps = 0
        seed = 0
        while steps < 100:
            result = run_decode(MaskGenerator(grammar, vocab), seed=seed, max_steps=60)
            token_ids = [s.token_id for s in result.steps]
            assert token_ids, (name, seed, result.status)
            episodes.append(token_ids)
            steps += len(token_ids)
            seed += 1
        # brute-force expectations from an unpruned shadow engine
        expected: list[list[int]] = []
        for token_ids in episodes:
            shadow = Engine(grammar, prune=False)
            masks = []
            for tid in token_ids:
                masks.append(brute_force_mask(shadow, vocab))
                if tid == vocab.eos_id:
                    break
                assert shadow.feed(vocab.tokens[tid]) is None
            expected.append(masks)
        for opts in all_configs():
            gen = MaskGenerator(grammar, vocab, opts)
            for token_ids, masks in zip(episodes, expected):
                got = replay_tokens(gen, token_ids[: len(masks)])
                assert got == masks, (name, opts)
                total_checked += len(got)
                gen.reset()
    report(capsys, 1, True, f"mask == brute force for {total_checked} (state, config) pairs, exact")


def test_criterion_2_recognition_equivalence(capsys):
    """Pruned == unpruned == derivation enumerator, 20 random grammars,
    all strings of length <= 10 over a 2-byte alphabet."""
    grammars = 0
    checked = 0
    for raw, cooked in sample_transformable_grammars(seed=101, count=20, alphabet=b"ab"):
        expected = language_upto(raw, 10)
        for s in all_strings(b"ab", 10):
            want = s in expected
            assert engine_accepts(cooked, s, prune=True) == want, (s, raw.productions)
            assert engine_accepts(cooked, s, prune=False) == want, (s, raw.productions)
            checked += 1
        grammars += 1
    report(capsys, 2, True, f"{grammars} grammars x {checked // grammars} strings, 3-way exact")


def test_criterion_3_worked_example(capsys):
    """Left-recursive unit grammar on input "aa": set 1 holds exactly the
    four known states after byte one; after set 2's compaction the finished
    (B -> "a" ., origin 0) item is gone from set 1."""
    grammar = load("aplus.cfg")  # 0: start -> start B, 1: start -> B, 2: B -> "a"
    four = {
        Item(2, 1, 0, None),  # B -> "a" .      (completed)
        Item(1, 1, 0, None),  # start -> B .    (completed via B)
        Item(0, 1, 0, None),  # start -> start . B
        Item(2, 0, 1, None),  # B -> . "a"      (predicted)
    }
    for prune in (False, True):
        eng = Engine(grammar, prune=prune)
        assert eng.feed(b"a") is None
        assert set(eng.sets[1].items) == four, prune
    eng = Engine(grammar, prune=True)
    assert eng.feed(b"aa") is None
    assert Item(2, 1, 0, None) not in eng.sets[1].items
    baseline = Engine(grammar, prune=False)
    assert baseline.feed(b"aa") is None
    assert Item(2, 1, 0, None) in baseline.sets[1].items
    report(capsys, 3, True, "four states in set 1; (B -> \"a\" ., 0, 1) pruned after set 2")


def test_criterion_4_bounded_live_state(capsys):
    """JSON array of numbers: pruned live state at element 50 equals
    element 5 and is strictly below the unpruned count."""
    grammar = load("json.cfg")

    def at_element(n: int, prune: bool) -> int:
        eng = Engine(grammar, prune=prune)
        assert eng.feed(b"[" + b"1," * n) is None
        return eng.live_item_count()

    p5, p50 = at_element(5, True), at_element(50, True)
    u50 = at_element(50, False)
    assert p50 == p5
    assert p50 < u50
    report(capsys, 4, True, f"pruned live items {p5} at elements 5 and 50; unpruned {u50}")


LITERAL_JSON = """
start ::= "{" pairs "}";
pairs ::= pair | pairs "," pair;
pair ::= string ":" number;
string ::= "\\"" schars "\\"";
schars ::= schar schars | schar;
schar ::= "a" | "b" | "x" | "y";
number ::= "1" | "2" | "3";
"""


def test_criterion_5_fingerprint_convergence(capsys):
    """Distinct histories `{"ab":1,` and `{"xy":2,` converge under pruning
    (equal fingerprints, cache hit on the second) and stay apart without."""
    grammar = transform(parse_grammar(LITERAL_JSON))
    vocab = synthetic_vocab(seed=31, size=64, alphabet=b'{}:,"abxy123')

    def fed(data: bytes, prune: bool) -> Engine:
        eng = Engine(grammar, prune=prune)
        assert eng.feed(data) is None
        return eng

    a, b = fed(b'{"ab":1,', True), fed(b'{"xy":2,', True)
    assert fingerprint(a) == fingerprint(b)
    shared = MaskCache()
    gen_a = MaskGenerator(grammar, vocab, mask_cache=shared)
    gen_b = MaskGenerator(grammar, vocab, mask_cache=shared)
    assert gen_a.engine.feed(b'{"ab":1,') is None
    assert gen_b.engine.feed(b'{"xy":2,') is None
    mask_a = gen_a.current_mask()
    assert not gen_a.last_cache_hit
    mask_b = gen_b.current_mask()
    assert gen_b.last_cache_hit
    assert mask_a == mask_b
    ua, ub = fed(b'{"ab":1,', False), fed(b'{"xy":2,', False)
    assert fingerprint(ua) != fingerprint(ub)
    report(capsys, 5, True, "pruned fingerprints equal with cache hit; unpruned differ")


def test_criterion_6_ablation_ordering(capsys):
    """Bench throughput: full >= no-prune >= no-prune+no-ci-cache, and
    full >= 1.5x the doubly-ablated configuration (repeats=5)."""
    grammar = load("json.cfg")
    vocab = synthetic_vocab(seed=2, size=256, alphabet=b'{}[]:,"0123abtrue')

    def mps(opts: SessionOptions) -> float:
        return run_bench(grammar, vocab, opts, repeats=5, seed=0, max_steps=100).masks_per_second

    full = mps(SessionOptions())
    no_prune = mps(SessionOptions(prune=False))
    doubly = mps(SessionOptions(prune=False, ci_cache=False))
    assert full >= no_prune >= doubly, (full, no_prune, doubly)
    assert full >= 1.5 * doubly, (full, doubly)
    report(
        capsys,
        6,
        True,
        f"masks/s full={full:.0f} >= no-prune={no_prune:.0f} >= "
        f"no-prune+no-ci={doubly:.0f}; ratio {full / doubly:.2f}x >= 1.5x",
    )


def test_criterion_7_transformation_preservation(capsys):
    """Each transformation preserves exhaustive membership (length <= 8);
    no epsilon rules survive except a permitted start epsilon."""
    fixed = [
        'start ::= A "+" B; A ::= "a" | "c"; B ::= "b" | "d";',
        'start ::= start B | B; B ::= "a";',
        'start ::= A B; A ::= "a" | ; B ::= "b" | C; C ::= ;',
        'start ::= "(" start ")" | ;',
        'start ::= "a"; junk ::= "b" junk;',
    ]
    grammars = [parse_grammar(t) for t in fixed]
    grammars += [raw for raw, _ in sample_transformable_grammars(seed=67, count=10)]
    count = 0
    for g in grammars:
        before = language_upto(g, 8)
        for step in (remove_useless_rules, eliminate_nullables, transform):
            out = step(g)
            assert language_upto(out, 8) == before, step.__name__
        cooked = transform(g)
        for prod in cooked.productions:
            if not prod.rhs:
                assert prod.lhs == cooked.start
        count += 1
    report(capsys, 7, True, f"{count} grammars, 3 transformations each, membership <= 8 exact")


def test_criterion_8_trie_cutoff(capsys):
    """Failing prefix "aaac" stored once; every later same-state token
    sharing it is rejected with zero trial parses."""
    grammar = load("aplus.cfg")
    eng = Engine(grammar)
    trie_probe = Vocabulary(tokens=[b"", b"aaacdefrf"], eos_id=0)
    from cfgmask import RejectedPrefixTrie

    trie = RejectedPrefixTrie()
    first: dict = {}
    mask = compute_mask(eng, trie_probe, trie=trie, counters=first)
    assert mask == 0  # token invalid, EOS not yet legal
    assert first["trials"] == 1
    assert trie.contains_prefix(b"aaac") and not trie.contains_prefix(b"aaa")
    sharing = Vocabulary(tokens=[b"", b"aaacd", b"aaacx", b"aaacdefzz"], eos_id=0)
    second: dict = {}
    mask = compute_mask(eng, sharing, trie=trie, counters=second)
    assert mask == 0
    assert second["trials"] == 0
    report(capsys, 8, True, 'prefix "aaac" cut off 3 later tokens with 0 trials')
