"""Decoding session: one engine plus its caches behind a small facade.

A MaskGenerator owns a single-writer Engine and wires together the four
optional optimizations (dynamic pruning, context-independent token cache,
rejected-prefix trie, fingerprint mask cache), each individually
toggleable.  Toggles change performance counters only, never mask bits.
"""

from __future__ import annotations

from dataclasses import dataclass

from .earley import Engine
from .grammar import Grammar
from .mask import (
    CITokenCache,
    RejectedPrefixTrie,
    TrieScope,
    Vocabulary,
    compute_mask,
    reset_trie_for_state,
)
from .state_cache import MaskCache, fingerprint


@dataclass
class SessionOptions:
    prune: bool = True
    ci_cache: bool = True
    trie: bool = True
    state_cache: bool = True
    cache_capacity: int = 4096

    @classmethod
    def none(cls) -> "SessionOptions":
        return cls(prune=False, ci_cache=False, trie=False, state_cache=False)


class MaskGenerator:
    def __init__(
        self,
        grammar: Grammar,
        vocab: Vocabulary,
        options: SessionOptions | None = None,
        ci_cache: CITokenCache | None = None,
        mask_cache: MaskCache | None = None,
    ):
        self.grammar = grammar
        self.vocab = vocab
        self.options = options or SessionOptions()
        self.engine = Engine(grammar, prune=self.options.prune)
        self.ci = ci_cache if ci_cache is not None else CITokenCache(grammar, vocab)
        self.mask_cache = (
            mask_cache if mask_cache is not None else MaskCache(self.options.cache_capacity)
        )
        self._trie_scope = TrieScope()
        self.trials_total = 0
        self.last_step_trials = 0
        self.last_cache_hit = False

    # -- state identity --

    def fingerprint(self) -> bytes:
        return fingerprint(self.engine)

    def _current_trie(self) -> RejectedPrefixTrie | None:
        if not self.options.trie:
            return None
        return reset_trie_for_state(self._trie_scope, self.fingerprint())

    # -- masks --

    def compute_mask(self) -> int:
        """Fresh mask computation, bypassing the state cache."""
        counters: dict = {}
        mask = compute_mask(
            self.engine,
            self.vocab,
            ci_cache=self.ci if self.options.ci_cache else None,
            trie=self._current_trie(),
            counters=counters,
        )
        self.last_step_trials = counters.get("trials", 0)
        self.trials_total += self.last_step_trials
        return mask

    def current_mask(self) -> int:
        """Mask for the current state, through the state cache if enabled."""
        if not self.options.state_cache:
            self.last_cache_hit = False
            return self.compute_mask()
        fp = self.fingerprint()
        mask, hit = self.mask_cache.lookup_or_compute(fp, self.compute_mask)
        if hit:
            self.last_step_trials = 0
        self.last_cache_hit = hit
        return mask

    # -- advancing --

    def accept(self, token_id: int) -> bool:
        """Feed one token atomically; rejection leaves the state unchanged.
        EOS is legal exactly when the state is accepting and finalizes the
        sequence."""
        if not (0 <= token_id < self.vocab.size):
            raise ValueError(f"token id {token_id} out of range")
        if token_id == self.vocab.eos_id:
            return self.engine.accept_eos()
        tok = self.vocab.tokens[token_id]
        if self.engine.trial_feed(tok) is not None:
            return False
        committed = self.engine.feed(tok)
        assert committed is None, "commit diverged from trial parse"
        return True

    def reset(self):
        """Back to the initial state; grammar-level caches are retained."""
        self.engine = Engine(self.grammar, prune=self.options.prune)
        self._trie_scope = TrieScope()
        self.last_step_trials = 0
        self.last_cache_hit = False

    def live_item_count(self) -> int:
        return self.engine.live_item_count()

    def is_accepting(self) -> bool:
        return self.engine.is_accepting()

    @property
    def finished(self) -> bool:
        return self.engine.finished
