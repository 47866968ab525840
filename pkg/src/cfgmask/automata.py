"""Byte-level deterministic finite automata for grammar terminals.

Terminals are matched over raw UTF-8 bytes so that multi-byte characters and
arbitrary token byte sequences behave uniformly.  A restricted regex dialect
(literals, classes, ranges, ``*`` ``+`` ``?``, ``|``, grouping, escapes) is
compiled via a Thompson NFA and subset construction; dead states are pruned
so every retained state can still reach an accepting state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEAD = -1

_BYTES_ALL = frozenset(range(256))
_DIGITS = frozenset(range(0x30, 0x3A))
_WORD = frozenset(
    list(range(0x30, 0x3A)) + list(range(0x41, 0x5B)) + list(range(0x61, 0x7B)) + [0x5F]
)
_SPACE = frozenset(b" \t\n\r\f\v")


class RegexError(ValueError):
    """Raised for unsupported or malformed terminal patterns."""


class EmptyLanguageError(RegexError):
    """Raised when a pattern matches no byte string at all."""


@dataclass
class TerminalAutomaton:
    """Deterministic byte automaton.  Missing transitions go to DEAD."""

    pattern: str
    transitions: list[dict[int, int]]
    start: int
    accepting: frozenset[int]
    _live_out: tuple[bool, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not self._live_out:
            self._live_out = tuple(bool(t) for t in self.transitions)

    def step(self, state: int, byte: int) -> int:
        if state == DEAD:
            return DEAD
        return self.transitions[state].get(byte, DEAD)

    def has_live_out(self, state: int) -> bool:
        return state != DEAD and self._live_out[state]

    def accepts(self, data: bytes) -> bool:
        q = self.start
        for b in data:
            q = self.transitions[q].get(b, DEAD)
            if q == DEAD:
                return False
        return q in self.accepting

    def accepts_empty(self) -> bool:
        return self.start in self.accepting

    def without_empty(self) -> "TerminalAutomaton":
        """Same language minus the empty string.

        Adds a non-accepting copy of the start state; needed when a nullable
        terminal is rewritten through an explicit epsilon production.
        """
        new_start = len(self.transitions)
        transitions = [dict(t) for t in self.transitions] + [dict(self.transitions[self.start])]
        return _pruned(self.pattern, transitions, new_start, set(self.accepting))


def _pruned(pattern: str, transitions, start: int, accepting: set[int]) -> TerminalAutomaton:
    """Drop states that cannot reach an accepting state, renumber densely."""
    n = len(transitions)
    preds: list[list[int]] = [[] for _ in range(n)]
    for s, t in enumerate(transitions):
        for dst in t.values():
            preds[dst].append(s)
    live = set(accepting)
    stack = list(accepting)
    while stack:
        s = stack.pop()
        for p in preds[s]:
            if p not in live:
                live.add(p)
                stack.append(p)
    if start not in live:
        raise EmptyLanguageError(f"pattern matches nothing: {pattern!r}")
    order = sorted(live)
    remap = {old: new for new, old in enumerate(order)}
    new_transitions = []
    for old in order:
        new_transitions.append(
            {b: remap[d] for b, d in sorted(transitions[old].items()) if d in live}
        )
    return TerminalAutomaton(
        pattern=pattern,
        transitions=new_transitions,
        start=remap[start],
        accepting=frozenset(remap[a] for a in accepting if a in live),
    )


def literal_automaton(data: bytes, pattern: str | None = None) -> TerminalAutomaton:
    """Single-path automaton accepting exactly ``data`` (must be non-empty)."""
    if not data:
        raise EmptyLanguageError("empty literal terminal")
    transitions = [{b: i + 1} for i, b in enumerate(data)] + [{}]
    return TerminalAutomaton(
        pattern=pattern if pattern is not None else repr(data),
        transitions=transitions,
        start=0,
        accepting=frozenset({len(data)}),
    )


# --- regex parsing (Thompson NFA over byte sets) ---


class _Nfa:
    def __init__(self):
        self.eps: list[list[int]] = []
        self.moves: list[list[tuple[frozenset[int], int]]] = []

    def new_state(self) -> int:
        self.eps.append([])
        self.moves.append([])
        return len(self.eps) - 1

    def add_eps(self, a: int, b: int):
        self.eps[a].append(b)

    def add_move(self, a: int, byteset: frozenset[int], b: int):
        self.moves[a].append((byteset, b))


class _Parser:
    def __init__(self, pattern: str, nfa: _Nfa):
        self.pat = pattern
        self.pos = 0
        self.nfa = nfa

    def peek(self):
        return self.pat[self.pos] if self.pos < len(self.pat) else None

    def take(self):
        c = self.peek()
        if c is None:
            raise RegexError(f"unexpected end of pattern: {self.pat!r}")
        self.pos += 1
        return c

    def parse(self) -> tuple[int, int]:
        frag = self.alternation()
        if self.pos != len(self.pat):
            raise RegexError(f"unbalanced pattern at offset {self.pos}: {self.pat!r}")
        return frag

    def alternation(self) -> tuple[int, int]:
        frags = [self.concat()]
        while self.peek() == "|":
            self.take()
            frags.append(self.concat())
        if len(frags) == 1:
            return frags[0]
        s, e = self.nfa.new_state(), self.nfa.new_state()
        for fs, fe in frags:
            self.nfa.add_eps(s, fs)
            self.nfa.add_eps(fe, e)
        return s, e

    def concat(self) -> tuple[int, int]:
        frags = []
        while self.peek() not in (None, "|", ")"):
            frags.append(self.repeat())
        if not frags:
            s = self.nfa.new_state()
            return s, s
        for (_, a_end), (b_start, _) in zip(frags, frags[1:]):
            self.nfa.add_eps(a_end, b_start)
        return frags[0][0], frags[-1][1]

    def repeat(self) -> tuple[int, int]:
        frag = self.atom()
        while self.peek() in ("*", "+", "?"):
            op = self.take()
            fs, fe = frag
            s, e = self.nfa.new_state(), self.nfa.new_state()
            self.nfa.add_eps(s, fs)
            self.nfa.add_eps(fe, e)
            if op in ("*", "?"):
                self.nfa.add_eps(s, e)
            if op in ("*", "+"):
                self.nfa.add_eps(fe, fs)
            frag = (s, e)
        if self.peek() == "{":
            raise RegexError("counted repetition {m,n} is not supported")
        return frag

    def atom(self) -> tuple[int, int]:
        c = self.take()
        if c == "(":
            frag = self.alternation()
            if self.take() != ")":
                raise RegexError(f"missing ')': {self.pat!r}")
            return frag
        if c == "[":
            return self.byteset_frag(self.char_class())
        if c == ".":
            return self.byteset_frag(_BYTES_ALL - {0x0A})
        if c == "\\":
            esc = self.escape()
            if isinstance(esc, frozenset):
                return self.byteset_frag(esc)
            return self.literal_frag(esc)
        if c in ")|*+?":
            raise RegexError(f"misplaced {c!r} in {self.pat!r}")
        return self.literal_frag(c.encode("utf-8"))

    def byteset_frag(self, byteset: frozenset[int]) -> tuple[int, int]:
        if not byteset:
            raise RegexError(f"empty character class in {self.pat!r}")
        s, e = self.nfa.new_state(), self.nfa.new_state()
        self.nfa.add_move(s, byteset, e)
        return s, e

    def literal_frag(self, data: bytes) -> tuple[int, int]:
        s = self.nfa.new_state()
        cur = s
        for b in data:
            nxt = self.nfa.new_state()
            self.nfa.add_move(cur, frozenset({b}), nxt)
            cur = nxt
        return s, cur

    def escape(self) -> bytes | frozenset[int]:
        c = self.take()
        simple = {"n": b"\n", "t": b"\t", "r": b"\r", "f": b"\f", "v": b"\v", "0": b"\0"}
        if c in simple:
            return simple[c]
        if c == "x":
            hi, lo = self.take(), self.take()
            try:
                return bytes([int(hi + lo, 16)])
            except ValueError:
                raise RegexError(f"bad \\x escape in {self.pat!r}") from None
        if c == "d":
            return _DIGITS
        if c == "D":
            return _BYTES_ALL - _DIGITS
        if c == "w":
            return _WORD
        if c == "W":
            return _BYTES_ALL - _WORD
        if c == "s":
            return _SPACE
        if c == "S":
            return _BYTES_ALL - _SPACE
        if c in "\\.^$*+?()[]{}|/\"'-":
            return c.encode("ascii")
        raise RegexError(f"unsupported escape \\{c} in {self.pat!r}")

    def char_class(self) -> frozenset[int]:
        negate = False
        if self.peek() == "^":
            self.take()
            negate = True
        members: set[int] = set()
        first = True
        while True:
            c = self.peek()
            if c is None:
                raise RegexError(f"unterminated class in {self.pat!r}")
            if c == "]" and not first:
                self.take()
                break
            first = False
            lo = self.class_member()
            if isinstance(lo, frozenset):
                members |= lo
                continue
            if self.peek() == "-" and self.pat[self.pos + 1 : self.pos + 2] not in ("]", ""):
                self.take()
                hi = self.class_member()
                if isinstance(hi, frozenset) or hi < lo:
                    raise RegexError(f"bad range in class: {self.pat!r}")
                members |= set(range(lo, hi + 1))
            else:
                members.add(lo)
        if negate:
            members = set(_BYTES_ALL) - members
        return frozenset(members)

    def class_member(self) -> int | frozenset[int]:
        c = self.take()
        if c == "\\":
            esc = self.escape()
            if isinstance(esc, frozenset):
                return esc
            if len(esc) != 1:
                raise RegexError(f"multi-byte escape not allowed in class: {self.pat!r}")
            return esc[0]
        data = c.encode("utf-8")
        if len(data) != 1:
            raise RegexError(f"multi-byte character not allowed in class: {self.pat!r}")
        return data[0]


def compile_terminal(pattern: str) -> TerminalAutomaton:
    """Compile a regex pattern into a pruned byte DFA with equal language."""
    nfa = _Nfa()
    start, end = _Parser(pattern, nfa).parse()

    def closure(states: frozenset[int]) -> frozenset[int]:
        seen = set(states)
        stack = list(states)
        while stack:
            s = stack.pop()
            for t in nfa.eps[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    start_set = closure(frozenset({start}))
    dstates = {start_set: 0}
    worklist = [start_set]
    transitions: list[dict[int, int]] = [{}]
    accepting: set[int] = set()
    if end in start_set:
        accepting.add(0)
    while worklist:
        cur = worklist.pop()
        cur_id = dstates[cur]
        by_byte: dict[int, set[int]] = {}
        for s in cur:
            for byteset, dst in nfa.moves[s]:
                for b in byteset:
                    by_byte.setdefault(b, set()).add(dst)
        for b in sorted(by_byte):
            nxt = closure(frozenset(by_byte[b]))
            if nxt not in dstates:
                dstates[nxt] = len(transitions)
                transitions.append({})
                if end in nxt:
                    accepting.add(dstates[nxt])
                worklist.append(nxt)
            transitions[cur_id][b] = dstates[nxt]
    return _pruned(pattern, transitions, 0, accepting)
