"""Byte-level Earley recognizer with per-byte state sets.

One Earley set per consumed byte.  Terminal automaton progress is carried
inside items, so regex terminals of any length are matched byte by byte and
every accepting-state crossing spawns an advanced item (all match lengths
are explored).  Per committed byte the phase order is fixed:
scan -> complete -> compact -> predict.

Because grammars are nullable-eliminated first, predicted items can never
be instantly complete, which keeps the strict phase separation sound.  The
only epsilon production permitted (start -> empty) is handled at engine
init, where the complete phase also runs on set 0.
"""

from __future__ import annotations

from typing import NamedTuple

from .grammar import Grammar, GrammarError, NT, Symbol
from .automata import DEAD
from . import pruning
from .pruning import COMP_CHILD, COMP_PARENT, PRED, SCAN, DependencyGraph

SCANNED = "scanned"
COMPLETED = "completed"
COMPACTED = "compacted"
PREDICTED = "predicted"


class Item(NamedTuple):
    """Extended dotted rule; fsm is (terminal id, automaton state) while a
    terminal is partially matched, else None."""

    prod: int
    dot: int
    origin: int
    fsm: tuple[int, int] | None


class EarleySet:
    __slots__ = ("index", "items", "vids", "pos", "phase", "_postdot_nt")

    def __init__(self, index: int, phase: str):
        self.index = index
        self.items: list[Item] = []
        self.vids: list[int] = []
        self.pos: dict[Item, int] = {}
        self.phase = phase
        self._postdot_nt: dict[int, list[int]] | None = None

    def invalidate_caches(self):
        self._postdot_nt = None

    def postdot_nt_positions(self, g: Grammar, nt: int) -> list[int]:
        """Positions of items whose postdot symbol is the given nonterminal.

        Cached; callers must invalidate after item additions or deletions.
        """
        if self._postdot_nt is None:
            index: dict[int, list[int]] = {}
            prods = g.productions
            for j, it in enumerate(self.items):
                rhs = prods[it.prod].rhs
                if it.dot < len(rhs):
                    sym = rhs[it.dot]
                    if not sym.is_terminal:
                        index.setdefault(sym.id, []).append(j)
            self._postdot_nt = index
        return self._postdot_nt.get(nt, [])


class _TrialSet:
    """Graph-free speculative set used by trial parsing."""

    __slots__ = ("index", "items", "seen")

    def __init__(self, index: int):
        self.index = index
        self.items: list[Item] = []
        self.seen: set[Item] = set()

    def add(self, item: Item):
        if item not in self.seen:
            self.seen.add(item)
            self.items.append(item)


class Engine:
    """Single-writer Earley engine over one shared immutable Grammar.

    Historical sets live in a sparse index -> set map; pruning may drop
    emptied sets while their indices stay reserved.
    """

    def __init__(self, grammar: Grammar, prune: bool = True, _empty: bool = False):
        self.g = grammar
        self.prune = prune
        self.finished = False  # set once EOS is accepted
        if _empty:
            return
        self.graph = DependencyGraph()
        self.sets: dict[int, EarleySet] = {}
        self.indices: list[int] = [0]
        self.last = 0
        s = EarleySet(0, SCANNED)
        self.sets[0] = s
        for pid in grammar.prods_of[grammar.start]:
            self._add_item(s, Item(pid, 0, 0, None), ())
        if not s.items:
            raise GrammarError("grammar denotes the empty language: start has no productions")
        self._complete(s)
        s.phase = COMPLETED
        if self.prune:
            pruning.compact(self)
        s.phase = COMPACTED
        self._predict(s)
        s.phase = PREDICTED

    # -- construction helpers --

    def _add_item(self, s: EarleySet, item: Item, edges):
        existing = s.pos.get(item)
        if existing is None:
            vid = self.graph.new_vertex()
            s.pos[item] = len(s.items)
            s.items.append(item)
            s.vids.append(vid)
            self.graph.add_edges(vid, edges)
            s.invalidate_caches()
        else:
            self.graph.add_edges(s.vids[existing], edges)

    def _scan_into(self, items, byte: int, emit):
        """Run the scan rule for one byte over `items`; `emit(item, j)` is
        called for each contribution with the source position j."""
        g = self.g
        prods = g.productions
        terminals = g.terminals
        any_emitted = False
        for j, it in enumerate(items):
            rhs = prods[it.prod].rhs
            if it.dot >= len(rhs):
                continue
            sym = rhs[it.dot]
            if not sym.is_terminal:
                continue
            auto = terminals[sym.id]
            q = it.fsm[1] if it.fsm is not None else auto.start
            q2 = auto.transitions[q].get(byte, DEAD)
            if q2 == DEAD:
                continue
            if auto.has_live_out(q2):
                emit(Item(it.prod, it.dot, it.origin, (sym.id, q2)), j)
                any_emitted = True
            if q2 in auto.accepting:
                emit(Item(it.prod, it.dot + 1, it.origin, None), j)
                any_emitted = True
        return any_emitted

    def _complete(self, s: EarleySet):
        g = self.g
        prods = g.productions
        i = 0
        while i < len(s.items):
            it = s.items[i]
            prod = prods[it.prod]
            if it.dot == len(prod.rhs):
                vid_p = s.vids[i]
                k = it.origin
                src = s if k == s.index else self.sets.get(k)
                if src is not None:
                    positions = list(src.postdot_nt_positions(g, prod.lhs))
                    for j in positions:
                        q_item = src.items[j]
                        vid_q = src.vids[j]
                        advanced = Item(q_item.prod, q_item.dot + 1, q_item.origin, None)
                        self._add_item(
                            s, advanced, ((vid_p, COMP_CHILD), (vid_q, COMP_PARENT))
                        )
            i += 1

    def _predict(self, s: EarleySet):
        g = self.g
        prods = g.productions
        i = 0
        while i < len(s.items):
            it = s.items[i]
            rhs = prods[it.prod].rhs
            if it.dot < len(rhs):
                sym = rhs[it.dot]
                if not sym.is_terminal:
                    src_vid = s.vids[i]
                    for pid in g.prods_of[sym.id]:
                        self._add_item(s, Item(pid, 0, s.index, None), ((src_vid, PRED),))
            i += 1

    # -- byte feeding --

    def accept_byte(self, byte: int) -> bool:
        """Scan one byte.  On rejection the engine is untouched (the
        speculative next set is discarded before commit)."""
        if self.finished:
            return False
        last = self.sets[self.last]
        assert last.phase == PREDICTED
        contributions: list[tuple[Item, int]] = []
        self._scan_into(last.items, byte, lambda item, j: contributions.append((item, j)))
        if not contributions:
            return False
        s = EarleySet(self.last + 1, SCANNED)
        self.sets[s.index] = s
        self.indices.append(s.index)
        self.last = s.index
        for item, j in contributions:
            self._add_item(s, item, ((last.vids[j], SCAN),))
        self._complete(s)
        s.phase = COMPLETED
        if self.prune:
            pruning.compact(self)
        s.phase = COMPACTED
        self._predict(s)
        s.phase = PREDICTED
        return True

    def feed(self, data: bytes) -> int | None:
        """Commit bytes one at a time; returns the index of the first
        rejected byte, or None if all were accepted."""
        for i, b in enumerate(data):
            if not self.accept_byte(b):
                return i
        return None

    def trial_feed(self, data: bytes) -> int | None:
        """Check whether `data` extends the current state, without mutating
        it: speculative sets are built on the side and committed sets are
        read-only.  Returns the first failing byte index, or None.

        Pruning, dedup-edge recording, and compaction are irrelevant to
        acceptance, so the trial runs scan/complete/predict only.
        """
        if self.finished:
            return 0 if data else None
        g = self.g
        prods = g.productions
        base = self.last
        tsets: list[_TrialSet] = []
        cur_items = self.sets[base].items
        for i, byte in enumerate(data):
            new = _TrialSet(base + 1 + len(tsets))
            self._scan_into(cur_items, byte, lambda item, _j: new.add(item))
            if not new.items:
                return i
            # complete
            j = 0
            while j < len(new.items):
                it = new.items[j]
                prod = prods[it.prod]
                if it.dot == len(prod.rhs):
                    k = it.origin
                    if k > base:
                        src = tsets[k - base - 1] if k - base - 1 < len(tsets) else new
                        targets = [
                            t
                            for t in list(src.items)
                            if t.dot < len(prods[t.prod].rhs)
                            and prods[t.prod].rhs[t.dot] == NT(prod.lhs)
                        ]
                        for t in targets:
                            new.add(Item(t.prod, t.dot + 1, t.origin, None))
                    else:
                        src_set = self.sets.get(k)
                        if src_set is not None:
                            for p in src_set.postdot_nt_positions(g, prod.lhs):
                                t = src_set.items[p]
                                new.add(Item(t.prod, t.dot + 1, t.origin, None))
                j += 1
            # predict
            j = 0
            while j < len(new.items):
                it = new.items[j]
                rhs = prods[it.prod].rhs
                if it.dot < len(rhs):
                    sym = rhs[it.dot]
                    if not sym.is_terminal:
                        for pid in g.prods_of[sym.id]:
                            new.add(Item(pid, 0, new.index, None))
                j += 1
            tsets.append(new)
            cur_items = new.items
        return None

    # -- observers --

    def is_accepting(self) -> bool:
        g = self.g
        prods = g.productions
        for it in self.sets[self.last].items:
            prod = prods[it.prod]
            if prod.lhs == g.start and it.dot == len(prod.rhs) and it.origin == 0:
                return True
        return False

    def accept_eos(self) -> bool:
        if self.finished or not self.is_accepting():
            return False
        self.finished = True
        return True

    def live_item_count(self) -> int:
        return pruning.live_item_count(self)

    def consumed(self) -> int:
        return self.last

    def clone(self) -> "Engine":
        eng = Engine(self.g, prune=self.prune, _empty=True)
        eng.finished = self.finished
        eng.graph = self.graph.clone()
        eng.indices = list(self.indices)
        eng.last = self.last
        eng.sets = {}
        for idx in self.indices:
            s = self.sets[idx]
            c = EarleySet(idx, s.phase)
            c.items = list(s.items)
            c.vids = list(s.vids)
            c.pos = dict(s.pos)
            eng.sets[idx] = c
        return eng

    def state_digest(self) -> tuple:
        """Structural snapshot used by tests to verify non-mutation."""
        return tuple(
            (idx, self.sets[idx].phase, tuple(self.sets[idx].items)) for idx in self.indices
        )
