"""Canonical state fingerprints and the fingerprint-keyed mask cache.

Distinct token histories can converge on the same pruned parse state; the
fingerprint canonicalizes away absolute byte positions (live set indices
are relabeled densely) so such states hash equal and reuse cached masks.
"""

from __future__ import annotations

import hashlib
from collections import OrderedDict
from typing import Callable

from .earley import Engine

DIGEST_BYTES = 16


def canonical_encoding(engine: Engine) -> bytes:
    """Injective encoding of the retained state up to index relabeling.

    Origins may reference sets that pruning has since dropped; those
    indices join the relabel map so encodings stay well defined.
    """
    anchors = set(engine.indices)
    for idx in engine.indices:
        for it in engine.sets[idx].items:
            anchors.add(it.origin)
    rank = {idx: r for r, idx in enumerate(sorted(anchors))}
    parts = [b"fin" if engine.finished else b"live"]
    for idx in engine.indices:
        s = engine.sets[idx]
        entries = sorted(
            (it.prod, it.dot, rank[it.origin]) + (it.fsm if it.fsm is not None else (-1, -1))
            for it in s.items
        )
        parts.append(f"S{rank[idx]}:{s.phase}:{entries}".encode())
    return b"|".join(parts)


def fingerprint(engine: Engine) -> bytes:
    """128-bit digest of the canonical encoding; stable across processes."""
    return hashlib.blake2b(canonical_encoding(engine), digest_size=DIGEST_BYTES).digest()


class MaskCache:
    """Bounded LRU map fingerprint -> mask, with hit/miss counters."""

    def __init__(self, capacity: int = 4096):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._map: OrderedDict[bytes, int] = OrderedDict()
        self.hits = 0
        self.misses = 0

    def lookup_or_compute(self, fp: bytes, compute: Callable[[], int]) -> tuple[int, bool]:
        cached = self._map.get(fp)
        if cached is not None:
            self._map.move_to_end(fp)
            self.hits += 1
            return cached, True
        self.misses += 1
        mask = compute()
        self._map[fp] = mask
        if len(self._map) > self.capacity:
            self._map.popitem(last=False)
        return mask, False

    def __len__(self) -> int:
        return len(self._map)

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0
