"""
Chart Parser Service
Probabilistic CYK parsing: Viterbi (max-product) parse, inside probability,
and exhaustive enumeration used as a test oracle
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.config_loader import config_loader
from services.errors import (EnumerationCapError, NoParseError, ParseError,
                             TreeRuleError, UnknownTokenError)
from services.grammar import Pcfg, Rule
from services.parse_tree import ParseTree, rule_key_of

logger = logging.getLogger(__name__)

Span = Tuple[int, int]
LN2 = math.log(2.0)


@dataclass(frozen=True)
class CellEntry:
    """
    One way of building a nonterminal over a span: rule, split point and score.
    Log-space scores are base 2 so that dyadic rule probabilities sum exactly.
    """
    rule: Rule
    split: Optional[int]
    score: float
    log_space: bool = True

    @property
    def probability(self) -> float:
        return 2.0 ** self.score if self.log_space else self.score

    @property
    def log_probability(self) -> float:
        if self.log_space:
            return self.score * LN2
        return math.log(self.score) if self.score > 0 else -math.inf


# Picks the entry that represents (span, nonterminal) in larger constituents.
# Receives the candidates sorted best-first; returns one of them.
Chooser = Callable[[Span, str, List[CellEntry]], CellEntry]


class Chart:
    """
    CYK chart: for each span [i, j) and nonterminal, every candidate entry sorted
    descending by probability (ties: grammar rule order, then smaller split), plus
    the entry chosen to represent the cell in larger spans.
    """

    def __init__(self, grammar: Pcfg, tokens: Sequence[str], log_space: bool = True):
        self.grammar = grammar
        self.tokens = tuple(tokens)
        self.log_space = log_space
        self.entries: Dict[Span, Dict[str, List[CellEntry]]] = {}
        self.chosen: Dict[Span, Dict[str, CellEntry]] = {}

    def __len__(self):
        return len(self.tokens)

    def cell(self, i: int, j: int) -> Dict[str, List[CellEntry]]:
        return self.entries.get((i, j), {})

    def best(self, i: int, j: int, nonterminal: str) -> Optional[CellEntry]:
        return self.chosen.get((i, j), {}).get(nonterminal)

    def sort_key(self, entry: CellEntry):
        split = -1 if entry.split is None else entry.split
        return -entry.score, self.grammar.rule_index(entry.rule), split

    def build_tree(self, i: int, j: int, nonterminal: str) -> ParseTree:
        entry = self.best(i, j, nonterminal)
        if entry is None:
            raise NoParseError(f"no {nonterminal} over span [{i}, {j})")
        if entry.rule.lexical:
            return ParseTree.node(entry.rule, [ParseTree.leaf(self.tokens[i], i)])
        left, right = entry.rule.rhs
        return ParseTree.node(entry.rule, [self.build_tree(i, entry.split, left),
                                           self.build_tree(entry.split, j, right)])


def check_tokens(g: Pcfg, tokens: Sequence[str]) -> None:
    if not tokens:
        raise ParseError("cannot parse an empty sentence")
    for position, token in enumerate(tokens):
        if not g.lexical_rules(token):
            raise UnknownTokenError(token, position)


def _first(span, nonterminal, candidates):
    return candidates[0]


def fill_chart(g: Pcfg, tokens: Sequence[str], choose: Chooser = None,
               log_space: bool = True) -> Chart:
    """
    Run CYK bottom-up. Each cell's candidates are combined from the chosen
    entries of its sub-cells; `choose` decides which candidate represents the
    cell (default: the best one, i.e. Viterbi).
    """
    check_tokens(g, tokens)
    choose = choose or _first
    chart = Chart(g, tokens, log_space)
    n = len(tokens)
    nt_order = {name: index for index, name in enumerate(g.nonterminal_names)}

    def weight(rule):
        return math.log2(rule.probability) if log_space else rule.probability

    def settle(span, candidates):
        chart.entries[span] = {}
        chart.chosen[span] = {}
        for nonterminal in sorted(candidates, key=nt_order.__getitem__):
            ranked = sorted(candidates[nonterminal], key=chart.sort_key)
            chart.entries[span][nonterminal] = ranked
            chart.chosen[span][nonterminal] = choose(span, nonterminal, ranked)

    for i, token in enumerate(tokens):
        candidates: Dict[str, List[CellEntry]] = {}
        for rule in g.lexical_rules(token):
            candidates.setdefault(rule.lhs, []).append(CellEntry(rule, None, weight(rule), log_space))
        settle((i, i + 1), candidates)

    for length in range(2, n + 1):
        for i in range(n - length + 1):
            j = i + length
            candidates = {}
            for k in range(i + 1, j):
                left_cell = chart.chosen[(i, k)]
                right_cell = chart.chosen[(k, j)]
                for left, left_entry in left_cell.items():
                    for right, right_entry in right_cell.items():
                        for rule in g.binary_rules(left, right):
                            if log_space:
                                score = weight(rule) + left_entry.score + right_entry.score
                            else:
                                score = weight(rule) * left_entry.score * right_entry.score
                            candidates.setdefault(rule.lhs, []).append(
                                CellEntry(rule, k, score, log_space))
            settle((i, j), candidates)
            if candidates:
                logger.debug(f"cell [{i},{j}): {', '.join(sorted(candidates))}")
    return chart


def build_chart(g: Pcfg, tokens: Sequence[str], log_space: bool = True) -> Chart:
    """The Viterbi chart for a sentence"""
    return fill_chart(g, tokens, log_space=log_space)


def viterbi_parse(g: Pcfg, tokens: Sequence[str], log_space: bool = True) -> Tuple[ParseTree, float]:
    """Maximum-probability parse rooted at the start symbol, and its probability"""
    chart = build_chart(g, tokens, log_space=log_space)
    n = len(tokens)
    if chart.best(0, n, g.start) is None:
        raise NoParseError(f"no parse: start symbol {g.start} does not span the sentence")
    tree = chart.build_tree(0, n, g.start)
    probability = chart.best(0, n, g.start).probability
    logger.info(f"Viterbi parse over {n} tokens, probability {probability:.6e}")
    return tree, probability


def inside_probability(g: Pcfg, tokens: Sequence[str]) -> float:
    """Sum of tree probabilities over all complete parses (0 when none), accumulated in log space"""
    check_tokens(g, tokens)
    n = len(tokens)
    inside: Dict[Span, Dict[str, float]] = {}
    for i, token in enumerate(tokens):
        inside[(i, i + 1)] = {rule.lhs: math.log(rule.probability) for rule in g.lexical_rules(token)}
    for length in range(2, n + 1):
        for i in range(n - length + 1):
            j = i + length
            terms: Dict[str, List[float]] = {}
            for k in range(i + 1, j):
                for left, left_score in inside[(i, k)].items():
                    for right, right_score in inside[(k, j)].items():
                        for rule in g.binary_rules(left, right):
                            terms.setdefault(rule.lhs, []).append(
                                math.log(rule.probability) + left_score + right_score)
            inside[(i, j)] = {nt: float(np.logaddexp.reduce(values)) for nt, values in terms.items()}
    total = inside[(0, n)].get(g.start)
    return 0.0 if total is None else math.exp(total)


def _count_parses(g: Pcfg, tokens: Sequence[str]) -> Dict[Span, Dict[str, int]]:
    n = len(tokens)
    counts: Dict[Span, Dict[str, int]] = {}
    for i, token in enumerate(tokens):
        counts[(i, i + 1)] = {rule.lhs: 1 for rule in g.lexical_rules(token)}
    for length in range(2, n + 1):
        for i in range(n - length + 1):
            j = i + length
            cell: Dict[str, int] = {}
            for k in range(i + 1, j):
                for left, left_count in counts[(i, k)].items():
                    for right, right_count in counts[(k, j)].items():
                        for rule in g.binary_rules(left, right):
                            cell[rule.lhs] = cell.get(rule.lhs, 0) + left_count * right_count
            counts[(i, j)] = cell
    return counts


def enumerate_parses(g: Pcfg, tokens: Sequence[str], cap: int = None) -> List[Tuple[ParseTree, float]]:
    """
    Every distinct complete parse exactly once, sorted descending by probability
    (equal probabilities ordered by preorder rule index / split). Exponential;
    meant as an oracle for short sentences.
    """
    parser_config = config_loader.get_parser_config()
    if cap is None:
        cap = parser_config['enumeration_cap']
    if cap < 1:
        raise ValueError("enumeration cap must be >= 1")
    max_tokens = parser_config['max_enumeration_tokens']
    if len(tokens) > max_tokens:
        raise ParseError(f"enumeration is limited to {max_tokens} tokens, got {len(tokens)}")
    check_tokens(g, tokens)

    n = len(tokens)
    counts = _count_parses(g, tokens)
    total = counts[(0, n)].get(g.start, 0)
    if total > cap:
        raise EnumerationCapError(f"{total} parses exceed the enumeration cap of {cap}")

    memo: Dict[Tuple[int, int, str], List[Tuple[ParseTree, float]]] = {}

    # only cells that take part in some complete parse are expanded, so every
    # list built here is no longer than the final one
    def expand(i, j, nonterminal):
        key = (i, j, nonterminal)
        if key in memo:
            return memo[key]
        results = []
        if j == i + 1:
            for rule in g.lexical_rules(tokens[i]):
                if rule.lhs == nonterminal:
                    results.append((ParseTree.node(rule, [ParseTree.leaf(tokens[i], i)]), rule.probability))
        else:
            for rule in g.lhs_rules(nonterminal):
                if rule.lexical:
                    continue
                left, right = rule.rhs
                for k in range(i + 1, j):
                    if not counts[(i, k)].get(left) or not counts[(k, j)].get(right):
                        continue
                    for left_tree, left_p in expand(i, k, left):
                        for right_tree, right_p in expand(k, j, right):
                            results.append((ParseTree.node(rule, [left_tree, right_tree]),
                                            left_p * right_p * rule.probability))
        memo[key] = results
        return results

    parses = expand(0, n, g.start) if total else []
    parses.sort(key=lambda item: (-item[1], item[0].derivation_key(g)))
    return parses


def tree_probability(g: Pcfg, t: ParseTree) -> float:
    """Product of the rule probabilities at every internal node; rules must come from g"""
    probability = 1.0
    for node in t.internal_nodes():
        lhs, rhs = rule_key_of(node)
        rule = g.find_rule(lhs, rhs)
        if rule is None or rule.lexical != node.children[0].is_leaf:
            raise TreeRuleError(f"rule {lhs} -> {' '.join(rhs)} is not in the grammar")
        probability *= rule.probability
    return probability
