"""State fingerprints and the fingerprint-keyed mask cache."""

from cfgmask import (
    Engine,
    MaskCache,
    canonical_encoding,
    fingerprint,
    parse_grammar,
    transform,
)

import pytest


def fed(grammar, data: bytes, prune: bool = True) -> Engine:
    eng = Engine(grammar, prune=prune)
    assert eng.feed(data) is None, data
    return eng


def test_fingerprint_deterministic(json_grammar):
    a = fed(json_grammar, b'{"a":1,')
    b = fed(json_grammar, b'{"a":1,')
    assert canonical_encoding(a) == canonical_encoding(b)
    assert fingerprint(a) == fingerprint(b)
    assert len(fingerprint(a)) == 16


def test_fingerprint_position_invariant(json_grammar):
    # same local state at different absolute byte offsets
    a = fed(json_grammar, b'{"ab":1,')
    b = fed(json_grammar, b'{"xy":2,')
    assert a.last != 0 and fingerprint(a) == fingerprint(b)
    c = fed(json_grammar, b'{"a":22,')  # different lengths too
    assert fingerprint(a) == fingerprint(c)


def test_fingerprint_distinguishes_states(json_grammar):
    fps = {
        fingerprint(fed(json_grammar, p))
        for p in (b"", b"{", b'{"a"', b'{"a":', b'{"a":1', b"[", b"[1")
    }
    assert len(fps) == 7


def test_fingerprint_tracks_finished(addition_grammar):
    eng = fed(addition_grammar, b"a+b")
    before = fingerprint(eng)
    eng.accept_eos()
    assert fingerprint(eng) != before


def test_fingerprint_depends_on_nesting(json_grammar):
    assert fingerprint(fed(json_grammar, b"[[1,")) != fingerprint(fed(json_grammar, b"[1,"))


def test_unpruned_histories_do_not_converge(json_grammar):
    # without pruning the dead history keeps the encodings apart
    a = fed(json_grammar, b"[1,2,", prune=False)
    b = fed(json_grammar, b"[3,4,5,", prune=False)
    assert fingerprint(a) != fingerprint(b)
    assert fingerprint(fed(json_grammar, b"[1,2,")) == fingerprint(fed(json_grammar, b"[3,4,5,"))


def test_canonical_encoding_covers_dropped_origins(aplus_grammar):
    # origins referencing pruned-away sets still relabel consistently
    a = fed(aplus_grammar, b"aaa")
    b = fed(aplus_grammar, b"aaaaaa")
    assert a.indices != b.indices
    assert canonical_encoding(a) == canonical_encoding(b)


def test_mask_cache_lru_and_counters():
    cache = MaskCache(capacity=2)
    calls = []

    def make(v):
        def compute():
            calls.append(v)
            return v

        return compute

    assert cache.lookup_or_compute(b"a", make(1)) == (1, False)
    assert cache.lookup_or_compute(b"a", make(99)) == (1, True)
    assert cache.lookup_or_compute(b"b", make(2)) == (2, False)
    cache.lookup_or_compute(b"a", make(99))  # refresh a
    cache.lookup_or_compute(b"c", make(3))  # evicts b
    assert cache.lookup_or_compute(b"b", make(4)) == (4, False)
    assert calls == [1, 2, 3, 4]
    assert (cache.hits, cache.misses) == (2, 4)
    assert cache.hit_rate == pytest.approx(2 / 6)
    assert len(cache) == 2


def test_mask_cache_rejects_bad_capacity():
    with pytest.raises(ValueError):
        MaskCache(capacity=0)
