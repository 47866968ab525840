"""Dependency tracking and dynamic state pruning for the Earley engine.

Every item created by predict, scan, or complete records edges from the
items that caused it.  During the compact phase (after complete, before
predict) every item without a live path to the newest Earley set is
deleted, along with any historical set that becomes empty.

Traversal detail: complete records two incoming edges on the advanced item,
one from the finished child and one from the waiting parent.  Backward
reachability follows predict, scan, and parent edges only.  Child edges are
provenance: a finished item in an old set is never consulted again by any
future operation, so following child edges would keep dead completion
spines alive forever (and defeat the point of pruning).
"""

from __future__ import annotations

PRED = 0
SCAN = 1
COMP_PARENT = 2
COMP_CHILD = 3

EDGE_NAMES = {PRED: "pred", SCAN: "scan", COMP_PARENT: "comp-parent", COMP_CHILD: "comp-child"}


class DependencyGraph:
    """Reverse adjacency over item vertex ids: vid -> [(source vid, kind)]."""

    def __init__(self):
        self.preds: dict[int, list[tuple[int, int]]] = {}
        self._next_vid = 0

    def new_vertex(self) -> int:
        vid = self._next_vid
        self._next_vid += 1
        self.preds[vid] = []
        return vid

    def add_edges(self, vid: int, edges):
        lst = self.preds[vid]
        for edge in edges:
            if edge not in lst:
                lst.append(edge)

    def drop(self, vid: int):
        del self.preds[vid]

    def edge_count(self) -> int:
        return sum(len(v) for v in self.preds.values())

    def clone(self) -> "DependencyGraph":
        g = DependencyGraph()
        g.preds = {vid: list(edges) for vid, edges in self.preds.items()}
        g._next_vid = self._next_vid
        return g


def compute_active(engine) -> set[int]:
    """Vertex ids retained by pruning: backward closure from the last set."""
    last = engine.sets[engine.last]
    active = set(last.vids)
    stack = list(last.vids)
    preds = engine.graph.preds
    while stack:
        vid = stack.pop()
        for src, kind in preds[vid]:
            if kind != COMP_CHILD and src not in active:
                active.add(src)
                stack.append(src)
    return active


def compact(engine):
    """Delete inactive items and drop emptied historical sets.

    Dropped set indices stay reserved (the set map is sparse) so item
    origin/end fields never need rewriting.
    """
    active = compute_active(engine)
    graph = engine.graph
    deleted: set[int] = set()
    kept_indices = []
    for idx in engine.indices:
        s = engine.sets[idx]
        if idx == engine.last:
            kept_indices.append(idx)
            continue
        if any(v not in active for v in s.vids):
            for v in s.vids:
                if v not in active:
                    graph.drop(v)
                    deleted.add(v)
            keep = [j for j, v in enumerate(s.vids) if v in active]
            s.items = [s.items[j] for j in keep]
            s.vids = [s.vids[j] for j in keep]
            s.pos = {item: j for j, item in enumerate(s.items)}
            s.invalidate_caches()
        if s.items:
            kept_indices.append(idx)
        else:
            del engine.sets[idx]
    engine.indices = kept_indices
    if deleted:
        # Child edges may reference deleted finished items; scrub them so
        # every surviving edge endpoint is live.
        for vid, edges in graph.preds.items():
            if any(src in deleted for src, _ in edges):
                graph.preds[vid] = [e for e in edges if e[0] not in deleted]


def live_item_count(engine) -> int:
    return sum(len(engine.sets[idx].items) for idx in engine.indices)
