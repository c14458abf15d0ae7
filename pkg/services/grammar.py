"""
Grammar Service
Represents, loads, serializes and validates probabilistic context-free grammars in Chomsky normal form
"""
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from services.config_loader import config_loader
from services.errors import GrammarError, GrammarSyntaxError, UnknownSymbolError

logger = logging.getLogger(__name__)

NONTERMINAL = 'nonterminal'
TERMINAL = 'terminal'

IDENTIFIER_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-\.\$]*$")
PROBABILITY_RE = re.compile(r"^(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?$")
# a quoted terminal, a comment, or any other run of non-space characters
LINE_TOKEN_RE = re.compile(r"'[^']*'|#.*|\S+")


@dataclass(frozen=True, order=True)
class Symbol:
    """A grammar symbol; terminals and nonterminals never share a name"""
    name: str
    kind: str = NONTERMINAL

    def __post_init__(self):
        if not self.name or any(ch.isspace() for ch in self.name):
            raise GrammarError(f"invalid symbol name {self.name!r}")
        if self.kind not in (NONTERMINAL, TERMINAL):
            raise GrammarError(f"invalid symbol kind {self.kind!r}")

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL


@dataclass(frozen=True)
class Rule:
    """CNF rule: lhs -> B C (binary) or lhs -> 'w' (lexical)"""
    lhs: str
    rhs: Tuple[str, ...]
    probability: float
    lexical: bool = False

    def __post_init__(self):
        if self.lexical and len(self.rhs) != 1:
            raise GrammarError(f"lexical rule {self.lhs} must have exactly one terminal")
        if not self.lexical and len(self.rhs) != 2:
            raise GrammarError(
                f"non-CNF rule {self.lhs} -> {' '.join(self.rhs)}: "
                f"{len(self.rhs)} RHS symbols (expected 2 nonterminals or 1 terminal)")
        if not (0.0 < self.probability <= 1.0):
            raise GrammarError(
                f"probability {self.probability} of rule {self.lhs} outside (0, 1]")

    @property
    def key(self) -> Tuple[str, Tuple[str, ...]]:
        return self.lhs, self.rhs

    @property
    def canonical_text(self) -> str:
        """Text used to register the rule as an entity, e.g. 'VP->VP_PP'"""
        return f"{self.lhs}->{'_'.join(self.rhs)}"

    def __str__(self):
        if self.lexical:
            return f"{self.lhs} -> '{self.rhs[0]}'"
        return f"{self.lhs} -> {self.rhs[0]} {self.rhs[1]}"


@dataclass(frozen=True)
class NormalizationViolation:
    nonterminal: str
    sum: float

    def __str__(self):
        return f"rules for {self.nonterminal} sum to {self.sum:.12g}, expected 1"


@dataclass(frozen=True)
class Pcfg:
    """
    The grammar quintuple: nonterminals, terminals, ordered CNF rules, start symbol.
    Rule probabilities live on the rules. Immutable after construction.
    """
    nonterminals: FrozenSet[Symbol]
    terminals: FrozenSet[Symbol]
    rules: Tuple[Rule, ...]
    start: Optional[str]

    # lookup indices, built once
    _order: Dict[Tuple[str, Tuple[str, ...]], int] = field(init=False, repr=False, compare=False)
    _by_lhs: Dict[str, Tuple[Rule, ...]] = field(init=False, repr=False, compare=False)
    _lexicon: Dict[str, Tuple[Rule, ...]] = field(init=False, repr=False, compare=False)
    _binary: Dict[Tuple[str, str], Tuple[Rule, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nt_names = {s.name for s in self.nonterminals}
        t_names = {s.name for s in self.terminals}
        clash = nt_names & t_names
        if clash:
            raise GrammarError(f"symbols used as both terminal and nonterminal: {sorted(clash)}")
        if self.rules and self.start not in nt_names:
            raise GrammarError(f"start symbol {self.start!r} is not a nonterminal")

        order, by_lhs, lexicon, binary = {}, {}, {}, {}
        for index, rule in enumerate(self.rules):
            if rule.key in order:
                raise GrammarError(f"duplicate rule {rule}")
            order[rule.key] = index
            if rule.lhs not in nt_names:
                raise GrammarError(f"rule {rule} has undeclared lhs")
            expected = t_names if rule.lexical else nt_names
            for sym in rule.rhs:
                if sym not in expected:
                    raise GrammarError(f"rule {rule} uses undeclared symbol {sym!r}")
            by_lhs.setdefault(rule.lhs, []).append(rule)
            if rule.lexical:
                lexicon.setdefault(rule.rhs[0], []).append(rule)
            else:
                binary.setdefault(rule.rhs, []).append(rule)

        object.__setattr__(self, '_order', order)
        object.__setattr__(self, '_by_lhs', {k: tuple(v) for k, v in by_lhs.items()})
        object.__setattr__(self, '_lexicon', {k: tuple(v) for k, v in lexicon.items()})
        object.__setattr__(self, '_binary', {k: tuple(v) for k, v in binary.items()})

    @classmethod
    def from_rules(cls, rules, start=None):
        """Build a grammar inferring symbol sets from the rules; start defaults to the first lhs"""
        rules = tuple(rules)
        nonterminals, terminals = set(), set()
        for rule in rules:
            nonterminals.add(Symbol(rule.lhs, NONTERMINAL))
            if rule.lexical:
                terminals.add(Symbol(rule.rhs[0], TERMINAL))
            else:
                nonterminals.update(Symbol(name, NONTERMINAL) for name in rule.rhs)
        if start is None and rules:
            start = rules[0].lhs
        return cls(frozenset(nonterminals), frozenset(terminals), rules, start)

    @property
    def nonterminal_names(self) -> List[str]:
        """Nonterminal names in first-appearance order"""
        seen = {}
        for rule in self.rules:
            seen.setdefault(rule.lhs, None)
            if not rule.lexical:
                for name in rule.rhs:
                    seen.setdefault(name, None)
        for sym in sorted(self.nonterminals):
            seen.setdefault(sym.name, None)
        return list(seen)

    @property
    def terminal_names(self) -> FrozenSet[str]:
        return frozenset(s.name for s in self.terminals)

    def has_nonterminal(self, name: str) -> bool:
        return any(s.name == name for s in self.nonterminals)

    def rule_index(self, rule: Rule) -> int:
        """Position of the rule in file order; raises KeyError for foreign rules"""
        return self._order[rule.key]

    def find_rule(self, lhs: str, rhs: Tuple[str, ...]) -> Optional[Rule]:
        index = self._order.get((lhs, tuple(rhs)))
        return None if index is None else self.rules[index]

    def lexical_rules(self, terminal: str) -> Tuple[Rule, ...]:
        return self._lexicon.get(terminal, ())

    def binary_rules(self, left: str, right: str) -> Tuple[Rule, ...]:
        return self._binary.get((left, right), ())

    def lhs_rules(self, lhs: str) -> Tuple[Rule, ...]:
        return self._by_lhs.get(lhs, ())


def _parse_probability(text, line_number):
    if not PROBABILITY_RE.match(text):
        raise GrammarSyntaxError(f"invalid probability {text!r}", line_number)
    value = float(text)
    if not (0.0 < value <= 1.0):
        raise GrammarSyntaxError(f"probability {text} outside (0, 1]", line_number)
    return value


def _parse_rule_line(tokens, line_number):
    if len(tokens) < 4 or tokens[1] != '->':
        raise GrammarSyntaxError("expected 'LHS -> RHS... PROB'", line_number)
    lhs, rhs, prob_text = tokens[0], tokens[2:-1], tokens[-1]
    if not IDENTIFIER_RE.match(lhs):
        raise GrammarSyntaxError(f"invalid nonterminal {lhs!r}", line_number)
    probability = _parse_probability(prob_text, line_number)

    quoted = [tok.startswith("'") for tok in rhs]
    if len(rhs) == 1 and quoted[0]:
        terminal = rhs[0][1:-1]
        if not terminal or any(ch.isspace() for ch in terminal):
            raise GrammarSyntaxError(f"invalid terminal {rhs[0]}", line_number)
        return Rule(lhs, (terminal,), probability, lexical=True)
    if len(rhs) == 2 and not any(quoted):
        for name in rhs:
            if not IDENTIFIER_RE.match(name):
                raise GrammarSyntaxError(f"invalid nonterminal {name!r}", line_number)
        return Rule(lhs, tuple(rhs), probability)
    raise GrammarSyntaxError(
        f"non-CNF rule: {len(rhs)} RHS symbols "
        f"(expected two nonterminals or one quoted terminal)", line_number)


def load_grammar(text: str) -> Pcfg:
    """
    Parse grammar-file content into a Pcfg.

    One rule per line: `LHS -> B C PROB` or `LHS -> 'w' PROB`; `#` starts a
    comment; blank lines are ignored; `%start X` overrides the start symbol
    (default: first rule's lhs). Rule order equals file order.
    """
    rules: List[Rule] = []
    seen = {}
    start = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        tokens = [tok for tok in LINE_TOKEN_RE.findall(raw) if not tok.startswith('#')]
        if not tokens:
            continue
        if tokens[0] == '%start':
            if len(tokens) != 2 or not IDENTIFIER_RE.match(tokens[1]):
                raise GrammarSyntaxError("expected '%start SYMBOL'", line_number)
            start = tokens[1]
            continue
        rule = _parse_rule_line(tokens, line_number)
        if rule.key in seen:
            raise GrammarSyntaxError(
                f"duplicate rule {rule} (first defined on line {seen[rule.key]})", line_number)
        seen[rule.key] = line_number
        rules.append(rule)

    if not rules:
        raise GrammarSyntaxError("grammar contains no rules")
    try:
        grammar = Pcfg.from_rules(rules, start=start)
    except GrammarError as e:
        raise GrammarSyntaxError(str(e)) from e
    logger.info(f"Loaded grammar: {len(grammar.rules)} rules, "
                f"{len(grammar.nonterminals)} nonterminals, {len(grammar.terminals)} terminals, "
                f"start {grammar.start}")
    return grammar


def format_probability(value: float) -> str:
    """Shortest positional decimal that reads back to the same float"""
    return np.format_float_positional(value, unique=True, trim='0')


def serialize_grammar(g: Pcfg) -> str:
    """Write a grammar back in file format; load_grammar(serialize_grammar(g)) has the same rules"""
    lines = []
    if g.rules and g.start != g.rules[0].lhs:
        lines.append(f"%start {g.start}")
    for rule in g.rules:
        if rule.lexical:
            lines.append(f"{rule.lhs} -> '{rule.rhs[0]}' {format_probability(rule.probability)}")
        else:
            lines.append(f"{rule.lhs} -> {rule.rhs[0]} {rule.rhs[1]} {format_probability(rule.probability)}")
    return '\n'.join(lines) + '\n'


def validate_normalization(g: Pcfg, tolerance: float = None) -> List[NormalizationViolation]:
    """One violation per nonterminal whose rule probabilities do not sum to 1 (within tolerance)"""
    if tolerance is None:
        tolerance = config_loader.get_grammar_config()['normalization_tolerance']
    sums: Dict[str, float] = {}
    for rule in g.rules:
        sums[rule.lhs] = sums.get(rule.lhs, 0.0) + rule.probability
    violations = [NormalizationViolation(lhs, total)
                  for lhs, total in sums.items() if abs(total - 1.0) > tolerance]
    for v in violations:
        logger.debug(f"Normalization violation: {v}")
    return violations


def rules_for(g: Pcfg, lhs: str) -> List[Rule]:
    """All rules with the given lhs, in file order"""
    if not g.has_nonterminal(lhs):
        raise UnknownSymbolError(f"unknown nonterminal {lhs!r}")
    return list(g.lhs_rules(lhs))
