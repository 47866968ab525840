"""Grammar-constrained decoding engine.

Byte-level Earley recognition over a context-free grammar with dynamic
state pruning, producing exact per-step token masks over a vocabulary.
"""

from .automata import (
    DEAD,
    EmptyLanguageError,
    RegexError,
    TerminalAutomaton,
    compile_terminal,
    literal_automaton,
)
from .grammar import (
    Grammar,
    GrammarError,
    NT,
    Production,
    Symbol,
    T,
    detect_hrr_rules,
    eliminate_nullables,
    nullable_nonterminals,
    parse_grammar,
    remove_useless_rules,
    transform,
)
from .earley import Engine, EarleySet, Item
from .mask import (
    CITokenCache,
    RejectedPrefixTrie,
    TrieScope,
    Vocabulary,
    brute_force_mask,
    compute_mask,
    hex_to_mask,
    iter_mask_bits,
    mask_to_bytes,
    mask_to_hex,
    popcount,
    reset_trie_for_state,
)
from .pruning import compact, compute_active, live_item_count
from .session import MaskGenerator, SessionOptions
from .state_cache import MaskCache, canonical_encoding, fingerprint

__version__ = "0.1.0"

__all__ = [
    "DEAD",
    "CITokenCache",
    "EarleySet",
    "EmptyLanguageError",
    "Engine",
    "Grammar",
    "GrammarError",
    "Item",
    "MaskCache",
    "MaskGenerator",
    "NT",
    "Production",
    "RegexError",
    "RejectedPrefixTrie",
    "SessionOptions",
    "Symbol",
    "T",
    "TerminalAutomaton",
    "TrieScope",
    "Vocabulary",
    "brute_force_mask",
    "canonical_encoding",
    "compact",
    "compile_terminal",
    "compute_active",
    "compute_mask",
    "detect_hrr_rules",
    "eliminate_nullables",
    "fingerprint",
    "hex_to_mask",
    "iter_mask_bits",
    "literal_automaton",
    "live_item_count",
    "mask_to_bytes",
    "mask_to_hex",
    "nullable_nonterminals",
    "parse_grammar",
    "popcount",
    "remove_useless_rules",
    "reset_trie_for_state",
    "transform",
]
