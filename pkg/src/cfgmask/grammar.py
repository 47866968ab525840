"""Context-free grammar model, text format parser, and transformations.

Grammar text format::

    start ::= A "+" B;          // literal terminals in double quotes
    A ::= "a" | "c";
    B ::= #"[0-9]+" | ;         // #"..." regex terminal, empty branch = epsilon

Rules end with ``;``, comments run from ``//`` to end of line, the default
start symbol is ``start``.  Literals support the escapes ``\\"``, ``\\\\``,
``\\n``, ``\\t``, ``\\r``, ``\\xHH``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .automata import (
    DEAD,
    EmptyLanguageError,
    TerminalAutomaton,
    compile_terminal,
    literal_automaton,
)

TERMINAL = "terminal"
NONTERMINAL = "nonterminal"


class Symbol(NamedTuple):
    kind: str
    id: int

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL


def T(i: int) -> Symbol:
    return Symbol(TERMINAL, i)


def NT(i: int) -> Symbol:
    return Symbol(NONTERMINAL, i)


class Production(NamedTuple):
    lhs: int
    rhs: tuple[Symbol, ...]


class GrammarError(ValueError):
    """Grammar text or structure error, with position info when available."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass
class Grammar:
    productions: list[Production]
    terminals: list[TerminalAutomaton]
    start: int
    nonterminal_names: list[str]
    prods_of: dict[int, list[int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.prods_of:
            self.reindex()
        if not (0 <= self.start < len(self.nonterminal_names)):
            raise GrammarError("start symbol out of range")

    def reindex(self):
        self.prods_of = {nt: [] for nt in range(len(self.nonterminal_names))}
        for pid, prod in enumerate(self.productions):
            self.prods_of[prod.lhs].append(pid)

    @property
    def nonterminal_count(self) -> int:
        return len(self.nonterminal_names)

    def symbol_name(self, sym: Symbol) -> str:
        if sym.is_terminal:
            return self.terminals[sym.id].pattern
        return self.nonterminal_names[sym.id]

    def format_production(self, pid: int, dot: int | None = None) -> str:
        prod = self.productions[pid]
        parts = [self.symbol_name(s) for s in prod.rhs]
        if dot is not None:
            parts.insert(dot, "•")
        body = " ".join(parts) if parts else ("•" if dot is not None else "ε")
        return f"{self.nonterminal_names[prod.lhs]} -> {body}"


# --- text format ---


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, msg: str):
        raise GrammarError(msg, self.line, self.col)

    def advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.text):
                if self.text[self.pos] == "\n":
                    self.line += 1
                    self.col = 1
                else:
                    self.col += 1
                self.pos += 1

    def skip_ws(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self.advance()
            elif self.text.startswith("//", self.pos):
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self.advance()
            else:
                break

    def tokens(self) -> Iterator[tuple[str, str, int, int]]:
        while True:
            self.skip_ws()
            if self.pos >= len(self.text):
                return
            line, col = self.line, self.col
            c = self.text[self.pos]
            if self.text.startswith("::=", self.pos):
                self.advance(3)
                yield ("::=", "::=", line, col)
            elif c in "|;":
                self.advance()
                yield (c, c, line, col)
            elif c == '"':
                yield ("literal", self.string_body(), line, col)
            elif self.text.startswith('#"', self.pos):
                self.advance()
                yield ("regex", self.string_body(raw=True), line, col)
            elif c.isalpha() or c == "_":
                start = self.pos
                while self.pos < len(self.text) and (
                    self.text[self.pos].isalnum() or self.text[self.pos] in "_-"
                ):
                    self.advance()
                yield ("name", self.text[start : self.pos], line, col)
            else:
                self.error(f"unexpected character {c!r}")

    def string_body(self, raw: bool = False) -> str:
        # Raw mode (regex terminals) only unescapes \" so regex escapes pass
        # through to the pattern compiler untouched.
        assert self.text[self.pos] == '"'
        self.advance()
        out = []
        escapes = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}
        while True:
            if self.pos >= len(self.text):
                self.error("unterminated string")
            c = self.text[self.pos]
            if c == '"':
                self.advance()
                return "".join(out)
            if c == "\n":
                self.error("newline in string (use \\n)")
            if c == "\\":
                nxt = self.text[self.pos + 1 : self.pos + 2]
                if raw:
                    if nxt == '"':
                        out.append('"')
                        self.advance(2)
                    else:
                        out.append(c)
                        self.advance()
                        if nxt == "\\":
                            out.append("\\")
                            self.advance()
                    continue
                if nxt in escapes:
                    out.append(escapes[nxt])
                    self.advance(2)
                elif nxt == "x":
                    hexpart = self.text[self.pos + 2 : self.pos + 4]
                    try:
                        out.append(chr(int(hexpart, 16)))
                    except ValueError:
                        self.error(f"bad \\x escape \\x{hexpart}")
                    self.advance(4)
                else:
                    self.error(f"unknown escape \\{nxt}")
                continue
            out.append(c)
            self.advance()
        raise AssertionError("unreachable")


def parse_grammar(text: str, start: str = "start") -> Grammar:
    """Parse grammar text; compile terminals; resolve all names.

    Nullable regex terminals (patterns matching the empty string) are
    rewritten into a fresh nonterminal with an explicit epsilon branch so
    that later transformations see nullability at the grammar level.
    """
    toks = list(_Lexer(text).tokens())
    if not toks:
        raise GrammarError("empty grammar")
    rules: list[tuple[str, list[list[tuple[str, str, int, int]]], int, int]] = []
    i = 0
    while i < len(toks):
        kind, value, line, col = toks[i]
        if kind != "name":
            raise GrammarError(f"expected rule name, got {value!r}", line, col)
        if i + 1 >= len(toks) or toks[i + 1][0] != "::=":
            raise GrammarError(f"expected '::=' after {value!r}", line, col)
        i += 2
        alts: list[list[tuple[str, str, int, int]]] = [[]]
        while i < len(toks) and toks[i][0] != ";":
            if toks[i][0] == "|":
                alts.append([])
            elif toks[i][0] in ("name", "literal", "regex"):
                alts[-1].append(toks[i])
            else:
                raise GrammarError(f"unexpected {toks[i][1]!r} in rule body", toks[i][2], toks[i][3])
            i += 1
        if i >= len(toks):
            raise GrammarError(f"missing ';' after rule {value!r}", line, col)
        i += 1
        rules.append((value, alts, line, col))

    nt_ids: dict[str, int] = {}
    nt_names: list[str] = []
    for name, _, _, _ in rules:
        if name not in nt_ids:
            nt_ids[name] = len(nt_names)
            nt_names.append(name)
    if start not in nt_ids:
        raise GrammarError(f"start symbol {start!r} is not defined")

    terminals: list[TerminalAutomaton] = []
    term_ids: dict[tuple[str, str], int] = {}
    productions: list[Production] = []
    nullable_term_nt: dict[int, int] = {}  # terminal id -> wrapper nonterminal
    pending: list[Production] = []

    def intern_terminal(kind: str, value: str, line: int, col: int) -> Symbol:
        key = (kind, value)
        if key in term_ids:
            tid = term_ids[key]
        else:
            try:
                if kind == "literal":
                    data = value.encode("utf-8")
                    if not data:
                        raise GrammarError('empty literal "" (use an empty branch for epsilon)')
                    auto = literal_automaton(data, pattern=f'"{value}"')
                else:
                    auto = compile_terminal(value)
                    auto.pattern = f'#"{value}"'
            except GrammarError:
                raise
            except EmptyLanguageError as exc:
                raise GrammarError(str(exc), line, col) from exc
            except ValueError as exc:
                raise GrammarError(f"invalid regex: {exc}", line, col) from exc
            tid = len(terminals)
            terminals.append(auto)
            term_ids[key] = tid
        auto = terminals[tid]
        if not auto.accepts_empty():
            return T(tid)
        # Nullable terminal: route through NT -> stripped-terminal | epsilon.
        if tid not in nullable_term_nt:
            wrapper = len(nt_names)
            nt_names.append(f"{auto.pattern}?")
            nullable_term_nt[tid] = wrapper
            try:
                stripped = auto.without_empty()
                sid = len(terminals)
                terminals.append(stripped)
                pending.append(Production(wrapper, (T(sid),)))
            except EmptyLanguageError:
                pass  # pattern matched only the empty string
            pending.append(Production(wrapper, ()))
        return NT(nullable_term_nt[tid])

    for name, alts, _, _ in rules:
        lhs = nt_ids[name]
        for alt in alts:
            rhs: list[Symbol] = []
            for kind, value, line, col in alt:
                if kind == "name":
                    if value not in nt_ids:
                        raise GrammarError(f"undefined nonterminal {value!r}", line, col)
                    rhs.append(NT(nt_ids[value]))
                else:
                    rhs.append(intern_terminal(kind, value, line, col))
            productions.append(Production(lhs, tuple(rhs)))
    productions.extend(pending)

    return Grammar(
        productions=productions,
        terminals=terminals,
        start=nt_ids[start],
        nonterminal_names=nt_names,
    )


# --- transformations ---


def _productive_nonterminals(g: Grammar) -> set[int]:
    productive: set[int] = set()
    changed = True
    while changed:
        changed = False
        for prod in g.productions:
            if prod.lhs in productive:
                continue
            if all(s.is_terminal or s.id in productive for s in prod.rhs):
                productive.add(prod.lhs)
                changed = True
    return productive


def remove_useless_rules(g: Grammar) -> Grammar:
    """Keep only productions whose nonterminals are productive and reachable."""
    productive = _productive_nonterminals(g)
    if g.start not in productive:
        raise GrammarError(
            f"grammar denotes the empty language: start symbol "
            f"{g.nonterminal_names[g.start]!r} is unproductive"
        )
    useful = [
        prod
        for prod in g.productions
        if prod.lhs in productive
        and all(s.is_terminal or s.id in productive for s in prod.rhs)
    ]
    reachable = {g.start}
    stack = [g.start]
    prods_by_lhs: dict[int, list[Production]] = {}
    for prod in useful:
        prods_by_lhs.setdefault(prod.lhs, []).append(prod)
    while stack:
        nt = stack.pop()
        for prod in prods_by_lhs.get(nt, []):
            for s in prod.rhs:
                if not s.is_terminal and s.id not in reachable:
                    reachable.add(s.id)
                    stack.append(s.id)
    kept = [prod for prod in useful if prod.lhs in reachable]

    nt_map: dict[int, int] = {}
    nt_names: list[str] = []
    for nt in range(g.nonterminal_count):
        if nt in reachable:
            nt_map[nt] = len(nt_names)
            nt_names.append(g.nonterminal_names[nt])
    used_terms = sorted({s.id for prod in kept for s in prod.rhs if s.is_terminal})
    term_map = {old: new for new, old in enumerate(used_terms)}
    terminals = [g.terminals[t] for t in used_terms]

    def remap(sym: Symbol) -> Symbol:
        return T(term_map[sym.id]) if sym.is_terminal else NT(nt_map[sym.id])

    productions = [
        Production(nt_map[prod.lhs], tuple(remap(s) for s in prod.rhs)) for prod in kept
    ]
    return Grammar(
        productions=productions,
        terminals=terminals,
        start=nt_map[g.start],
        nonterminal_names=nt_names,
    )


def nullable_nonterminals(g: Grammar) -> set[int]:
    nullable: set[int] = set()
    changed = True
    while changed:
        changed = False
        for prod in g.productions:
            if prod.lhs in nullable:
                continue
            if all((not s.is_terminal) and s.id in nullable for s in prod.rhs):
                nullable.add(prod.lhs)
                changed = True
    return nullable


def eliminate_nullables(g: Grammar) -> Grammar:
    """Expand nullable symbols away; keep start -> epsilon only when the
    language contains the empty string (adding a fresh start if the original
    start is used recursively)."""
    nullable = nullable_nonterminals(g)
    if not nullable:
        return g

    new_prods: list[Production] = []
    seen: set[Production] = set()

    def emit(prod: Production):
        if prod not in seen:
            seen.add(prod)
            new_prods.append(prod)

    for prod in g.productions:
        optional = [i for i, s in enumerate(prod.rhs) if not s.is_terminal and s.id in nullable]
        for mask in range(1 << len(optional)):
            drop = {optional[k] for k in range(len(optional)) if mask >> k & 1}
            rhs = tuple(s for i, s in enumerate(prod.rhs) if i not in drop)
            if rhs:
                emit(Production(prod.lhs, rhs))

    nt_names = list(g.nonterminal_names)
    start = g.start
    if g.start in nullable:
        start_on_rhs = any(
            not s.is_terminal and s.id == g.start for prod in g.productions for s in prod.rhs
        )
        if start_on_rhs:
            start = len(nt_names)
            nt_names.append(g.nonterminal_names[g.start] + "'")
            emit(Production(start, (NT(g.start),)))
        emit(Production(start, ()))

    return Grammar(
        productions=new_prods,
        terminals=list(g.terminals),
        start=start,
        nonterminal_names=nt_names,
    )


def transform(g: Grammar) -> Grammar:
    """Standard normalization pipeline: nullable elimination can orphan
    rules, so useless-rule removal runs on both sides of it."""
    return remove_useless_rules(eliminate_nullables(remove_useless_rules(g)))


HRR_UNIT_TERMINAL = "A->c"
HRR_LEFT_LINEAR = "A->Ba"
HRR_EPSILON = "A->eps"


def detect_hrr_rules(g: Grammar) -> list[tuple[int, str]]:
    """Flag productions whose completed sub-states become prunable.

    Shapes: a single terminal, a nonterminal followed by a terminal (with
    the nonterminal approximated as unambiguous by having exactly one
    production), or an empty body.  Diagnostic only.
    """
    out: list[tuple[int, str]] = []
    for pid, prod in enumerate(g.productions):
        rhs = prod.rhs
        if len(rhs) == 0:
            out.append((pid, HRR_EPSILON))
        elif len(rhs) == 1 and rhs[0].is_terminal:
            out.append((pid, HRR_UNIT_TERMINAL))
        elif (
            len(rhs) == 2
            and not rhs[0].is_terminal
            and rhs[1].is_terminal
            and len(g.prods_of.get(rhs[0].id, [])) == 1
        ):
            out.append((pid, HRR_LEFT_LINEAR))
    return out
