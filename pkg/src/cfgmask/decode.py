"""Simulated decoding loop and ablation benchmark harness.

Stands in for an LLM sampler: at each step it samples uniformly (seeded)
from the tokens the mask allows, preferring EOS with probability 0.1 when
EOS is legal so unbounded languages still terminate.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .grammar import Grammar
from .mask import Vocabulary, popcount
from .session import MaskGenerator, SessionOptions

EOS_PREFERENCE = 0.1

STATUS_OK = "ok"
STATUS_DEAD_END = "dead_end"
STATUS_MAX_STEPS = "max_steps"


@dataclass
class DecodeStep:
    step: int
    fingerprint: str
    allowed: int
    token_id: int
    cache_hit: bool
    live_items: int
    trials: int

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "fingerprint": self.fingerprint,
            "allowed": self.allowed,
            "token_id": self.token_id,
            "cache_hit": self.cache_hit,
            "live_items": self.live_items,
            "trials": self.trials,
        }


@dataclass
class DecodeResult:
    steps: list[DecodeStep]
    output: bytes
    status: str
    accepting_at_end: bool
    mask_seconds: float


def choose_token(mask: int, vocab: Vocabulary, rng: random.Random) -> int | None:
    if mask == 0:
        return None
    eos_bit = 1 << vocab.eos_id
    if mask & eos_bit and rng.random() < EOS_PREFERENCE:
        return vocab.eos_id
    non_eos = mask & ~eos_bit
    if non_eos == 0:
        return vocab.eos_id
    allowed = []
    bits = non_eos
    i = 0
    while bits:
        if bits & 1:
            allowed.append(i)
        bits >>= 1
        i += 1
    return rng.choice(allowed)


def run_decode(
    gen: MaskGenerator,
    seed: int,
    max_steps: int,
) -> DecodeResult:
    rng = random.Random(seed)
    vocab = gen.vocab
    steps: list[DecodeStep] = []
    output = bytearray()
    mask_seconds = 0.0
    status = STATUS_MAX_STEPS
    for step_index in range(max_steps):
        t0 = time.perf_counter()
        mask = gen.current_mask()
        mask_seconds += time.perf_counter() - t0
        token_id = choose_token(mask, vocab, rng)
        if token_id is None:
            status = STATUS_DEAD_END
            break
        accepted = gen.accept(token_id)
        assert accepted, "sampled a token whose mask bit was set but it was rejected"
        steps.append(
            DecodeStep(
                step=step_index,
                fingerprint=gen.fingerprint().hex(),
                allowed=popcount(mask),
                token_id=token_id,
                cache_hit=gen.last_cache_hit,
                live_items=gen.live_item_count(),
                trials=gen.last_step_trials,
            )
        )
        if token_id == vocab.eos_id:
            status = STATUS_OK
            break
        output.extend(vocab.tokens[token_id])
    return DecodeResult(
        steps=steps,
        output=bytes(output),
        status=status,
        accepting_at_end=gen.finished or gen.is_accepting(),
        mask_seconds=mask_seconds,
    )


@dataclass
class BenchReport:
    config: dict
    repeats: int
    total_steps: int
    mask_seconds: float
    masks_per_second: float
    mean_trials: float
    live_items_mean: float
    live_items_max: int
    cache_hits: int
    cache_misses: int
    hit_rate: float
    live_items_by_step: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "repeats": self.repeats,
            "total_steps": self.total_steps,
            "mask_seconds": round(self.mask_seconds, 6),
            "masks_per_second": round(self.masks_per_second, 2),
            "mean_trials": round(self.mean_trials, 3),
            "live_items_mean": round(self.live_items_mean, 2),
            "live_items_max": self.live_items_max,
            "cache_hits": self.cache_hits,
            "cache_misses": self.cache_misses,
            "hit_rate": round(self.hit_rate, 4),
        }


def run_bench(
    grammar: Grammar,
    vocab: Vocabulary,
    options: SessionOptions,
    repeats: int,
    seed: int = 0,
    max_steps: int = 128,
) -> BenchReport:
    """Sequential repeated decodes sharing the grammar-level caches.

    Each repeat uses seed + repeat index, so distinct token histories can
    still converge on shared pruned states and hit the mask cache.
    """
    gen = MaskGenerator(grammar, vocab, options)
    total_steps = 0
    mask_seconds = 0.0
    trial_sum = 0
    live_sum = 0
    live_max = 0
    for r in range(repeats):
        result = run_decode(gen, seed=seed + r, max_steps=max_steps)
        total_steps += len(result.steps)
        mask_seconds += result.mask_seconds
        for s in result.steps:
            trial_sum += s.trials
            live_sum += s.live_items
            live_max = max(live_max, s.live_items)
        gen.reset()
    return BenchReport(
        config={
            "prune": options.prune,
            "ci_cache": options.ci_cache,
            "trie": options.trie,
            "state_cache": options.state_cache,
        },
        repeats=repeats,
        total_steps=total_steps,
        mask_seconds=mask_seconds,
        masks_per_second=total_steps / mask_seconds if mask_seconds else 0.0,
        mean_trials=trial_sum / total_steps if total_steps else 0.0,
        live_items_mean=live_sum / total_steps if total_steps else 0.0,
        live_items_max=live_max,
        cache_hits=gen.mask_cache.hits,
        cache_misses=gen.mask_cache.misses,
        hit_rate=gen.mask_cache.hit_rate,
    )


def replay_tokens(gen: MaskGenerator, token_ids: list[int]) -> list[int]:
    """Feed a fixed token sequence, returning the mask seen before each
    token.  Used for cross-configuration mask comparison."""
    masks = []
    for tid in token_ids:
        masks.append(gen.current_mask())
        accepted = gen.accept(tid)
        if not accepted:
            raise AssertionError(f"replay token {tid} rejected")
    return masks
