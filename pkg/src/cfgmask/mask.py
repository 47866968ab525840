"""Per-step token mask computation.

Masks are plain Python ints used as bit vectors: bit i set means token i is
a valid continuation.  The wire format is the little-endian byte image as
lowercase hex (bit 0 of byte 0 is token 0), zero-padded to a byte boundary.

A mask is exact by construction: context-independent classification from
the terminal automata decides most tokens, stored rejected prefixes cut off
known-bad byte sequences, and everything left over is settled by trial
parsing against the live engine.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

from .automata import DEAD
from .earley import Engine
from .grammar import Grammar


@dataclass
class Vocabulary:
    tokens: list[bytes]
    eos_id: int

    def __post_init__(self):
        if not (0 <= self.eos_id < len(self.tokens)):
            raise ValueError("eos_id out of range")
        if self.tokens[self.eos_id] != b"":
            raise ValueError("EOS token must have an empty byte sequence")
        for i, tok in enumerate(self.tokens):
            if i != self.eos_id and not tok:
                raise ValueError(f"token {i} is empty (only EOS may be empty)")

    @property
    def size(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        obj = json.loads(text)
        eos_id = obj["eos_id"]
        raw = obj["tokens"]
        ids = sorted(int(k) for k in raw)
        size = max(max(ids) + 1 if ids else 0, eos_id + 1)
        tokens = [None] * size
        for k, v in raw.items():
            tokens[int(k)] = base64.b64decode(v)
        if tokens[eos_id] is None:
            tokens[eos_id] = b""
        missing = [i for i, t in enumerate(tokens) if t is None]
        if missing:
            raise ValueError(f"vocabulary ids are not dense, missing: {missing[:5]}")
        return cls(tokens=tokens, eos_id=eos_id)

    def to_json(self) -> str:
        return json.dumps(
            {
                "eos_id": self.eos_id,
                "tokens": {
                    str(i): base64.b64encode(t).decode("ascii")
                    for i, t in enumerate(self.tokens)
                },
            }
        )


def mask_to_hex(bits: int, size: int) -> str:
    nbytes = (size + 7) // 8
    return bits.to_bytes(nbytes, "little").hex()


def hex_to_mask(text: str) -> int:
    return int.from_bytes(bytes.fromhex(text), "little")


def mask_to_bytes(bits: int, size: int) -> bytes:
    return bits.to_bytes((size + 7) // 8, "little")


def iter_mask_bits(bits: int):
    i = 0
    while bits:
        if bits & 1:
            yield i
        bits >>= 1
        i += 1


def popcount(bits: int) -> int:
    return bits.bit_count()


class CITokenCache:
    """Context-independent token classification per (terminal, state).

    A token is accepted from a state when the automaton consumes all its
    bytes without dying: the in-flight terminal survives, so the token is
    valid regardless of grammar context.  It is rejected when the walk dies
    before any visited state (including the starting one) was accepting:
    the terminal can then never complete mid-token, so no grammar context
    can save it.  Die-after-accept is context-dependent; suffix strings of
    completed terminals are deliberately not analyzed.

    Entries are bitset pairs, built lazily per state so that mid-terminal
    decoding states pay only for what they touch.
    """

    def __init__(self, grammar: Grammar, vocab: Vocabulary):
        self.grammar = grammar
        self.vocab = vocab
        self._entries: dict[tuple[int, int], tuple[int, int]] = {}

    def entry(self, terminal_id: int, state: int) -> tuple[int, int]:
        key = (terminal_id, state)
        cached = self._entries.get(key)
        if cached is not None:
            return cached
        auto = self.grammar.terminals[terminal_id]
        transitions = auto.transitions
        accepting = auto.accepting
        accepted = 0
        rejected = 0
        eos = self.vocab.eos_id
        for i, tok in enumerate(self.vocab.tokens):
            if i == eos:
                continue
            q = state
            seen_accepting = q in accepting
            died = False
            for b in tok:
                q = transitions[q].get(b, DEAD)
                if q == DEAD:
                    died = True
                    break
                if q in accepting:
                    seen_accepting = True
            if not died:
                accepted |= 1 << i
            elif not seen_accepting:
                rejected |= 1 << i
        result = (accepted, rejected)
        self._entries[key] = result
        return result

    def entry_count(self) -> int:
        return len(self._entries)


_END = object()


class RejectedPrefixTrie:
    """Byte trie of minimal rejected prefixes for one engine state.

    No stored prefix is a prefix of another: inserting a shorter prefix
    replaces any longer ones under it, and inserting under an existing
    stored prefix is a no-op.
    """

    def __init__(self):
        self.root: dict = {}
        self.count = 0

    def insert(self, prefix: bytes):
        assert prefix
        node = self.root
        for b in prefix[:-1]:
            nxt = node.get(b)
            if nxt is _END:
                return
            if nxt is None:
                nxt = {}
                node[b] = nxt
            node = nxt
        last = prefix[-1]
        existing = node.get(last)
        if existing is _END:
            return
        node[last] = _END
        self.count += 1

    def contains_prefix(self, data: bytes) -> bool:
        node = self.root
        for b in data:
            nxt = node.get(b)
            if nxt is _END:
                return True
            if nxt is None:
                return False
            node = nxt
        return False


def reset_trie_for_state(scope: "TrieScope", fingerprint: bytes) -> RejectedPrefixTrie:
    """Rescope the trie: cleared whenever the engine fingerprint changes so
    prefixes never leak between distinct states."""
    if scope.fingerprint != fingerprint:
        scope.fingerprint = fingerprint
        scope.trie = RejectedPrefixTrie()
    return scope.trie


@dataclass
class TrieScope:
    fingerprint: bytes | None = None
    trie: RejectedPrefixTrie = field(default_factory=RejectedPrefixTrie)


def frontier_pairs(engine: Engine) -> set[tuple[int, int]]:
    """(terminal, automaton state) pairs exposed by the last set's postdot
    terminals; partially matched terminals contribute their current state."""
    g = engine.g
    prods = g.productions
    pairs: set[tuple[int, int]] = set()
    for it in engine.sets[engine.last].items:
        rhs = prods[it.prod].rhs
        if it.dot < len(rhs):
            sym = rhs[it.dot]
            if sym.is_terminal:
                state = it.fsm[1] if it.fsm is not None else g.terminals[sym.id].start
                pairs.add((sym.id, state))
    return pairs


def compute_mask(
    engine: Engine,
    vocab: Vocabulary,
    ci_cache: CITokenCache | None = None,
    trie: RejectedPrefixTrie | None = None,
    counters: dict | None = None,
) -> int:
    """Exact mask for the current state: bit i is set iff feeding token i's
    bytes would be accepted.  EOS bit equals is_accepting."""
    size = vocab.size
    eos_bit = 1 << vocab.eos_id
    full = (1 << size) - 1
    if engine.finished:
        return 0
    pairs = frontier_pairs(engine)
    valid = 0
    if not pairs:
        rejected_all = full
    elif ci_cache is not None:
        rejected_all = full
        for tid, state in pairs:
            acc, rej = ci_cache.entry(tid, state)
            valid |= acc
            rejected_all &= rej
    else:
        rejected_all = 0
    undecided = full & ~valid & ~rejected_all & ~eos_bit
    trials = 0
    tokens = vocab.tokens
    for i in iter_mask_bits(undecided):
        tok = tokens[i]
        if trie is not None and trie.contains_prefix(tok):
            continue
        trials += 1
        fail = engine.trial_feed(tok)
        if fail is None:
            valid |= 1 << i
        elif trie is not None:
            trie.insert(tok[: fail + 1])
    if engine.is_accepting():
        valid |= eos_bit
    else:
        valid &= ~eos_bit
    if counters is not None:
        counters["trials"] = counters.get("trials", 0) + trials
    return valid


def brute_force_mask(engine: Engine, vocab: Vocabulary) -> int:
    """Oracle: trial-parse every token with no caches, no trie, no
    shortcuts.  EOS from is_accepting."""
    mask = 0
    for i, tok in enumerate(vocab.tokens):
        if i == vocab.eos_id:
            if engine.is_accepting() and not engine.finished:
                mask |= 1 << i
            continue
        if not engine.finished and engine.trial_feed(tok) is None:
            mask |= 1 << i
    return mask
