"""
Semantic-Syntactic Parser
CYK parsing where each cell with competing derivations for one nonterminal
is resolved by conflating the weaker candidate's syntactic probability with
the knowledge base's belief in it
"""
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from services.bridge import (BridgeBinding, add_log_odds, from_log_odds, log_odds,
                             log_odds_from_log, semantic_query_probability)
from services.chart_parser import CellEntry, fill_chart
from services.config_loader import config_loader
from services.errors import NoParseError, SemanticQueryError, SsparseError
from services.grammar import Pcfg, Rule
from services.parse_tree import ParseTree

logger = logging.getLogger(__name__)

LITERAL = 'literal'
NORMALIZED = 'normalized'


@dataclass(frozen=True)
class AmbiguityCandidate:
    rule: Rule
    span: Tuple[int, int]
    derivation: str
    log_p_pcfg: float
    split: Optional[int] = None

    @property
    def p_pcfg(self) -> float:
        return math.exp(self.log_p_pcfg)


@dataclass(frozen=True)
class Comparison:
    """One pairwise decision: `queried` is the weaker candidate, `other` the stronger"""
    queried: AmbiguityCandidate
    other: AmbiguityCandidate
    p_mebn: float
    conflated: float
    threshold: float
    winner: AmbiguityCandidate
    p_mebn_other: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {'queried': str(self.queried.rule), 'other': str(self.other.rule),
                'p_mebn': self.p_mebn, 'conflated': self.conflated,
                'threshold': self.threshold, 'winner': str(self.winner.rule)}
        if self.p_mebn_other is not None:
            data['p_mebn_other'] = self.p_mebn_other
        return data


@dataclass(frozen=True)
class DecisionRecord:
    span: Tuple[int, int]
    lhs: str
    candidates: Tuple[AmbiguityCandidate, ...]
    comparisons: Tuple[Comparison, ...]
    winner: AmbiguityCandidate
    mode: str

    @property
    def queried(self) -> AmbiguityCandidate:
        return self.comparisons[-1].queried

    @property
    def p_mebn(self) -> float:
        return self.comparisons[-1].p_mebn

    @property
    def conflated(self) -> float:
        return self.comparisons[-1].conflated

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'span': [self.span[0], self.span[1]],
            'lhs': self.lhs,
            'candidates': [{'rule': str(c.rule), 'p_pcfg': c.p_pcfg, 'split': c.split}
                           for c in self.candidates],
            'queried': str(self.queried.rule),
            'p_mebn': self.p_mebn,
            'conflated': self.conflated,
            'winner': str(self.winner.rule),
            'mode': self.mode,
        }
        if len(self.comparisons) > 1:
            data['comparisons'] = [c.to_dict() for c in self.comparisons]
        return data


@dataclass
class DecisionTrace:
    """Decision records in chart-filling order (shorter spans first)"""
    records: List[DecisionRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_list(self) -> List[Dict[str, Any]]:
        return [r.to_dict() for r in self.records]

    def to_json(self) -> str:
        return json.dumps(self.to_list())


def _decide(weak: AmbiguityCandidate, strong: AmbiguityCandidate, binding: BridgeBinding,
            mode: str, depth_limit: int, symmetric: bool) -> Comparison:
    """
    Select the weaker candidate iff its conflated probability beats the stronger
    one's (literal: raw syntactic probability; normalized: pairwise share).
    Computed in log-odds so tiny sentence probabilities never underflow.
    """
    q_weak = semantic_query_probability(binding, weak.derivation, weak.rule, depth_limit)
    q_strong = None
    if mode == NORMALIZED:
        weak_odds = weak.log_p_pcfg - strong.log_p_pcfg
        strong_odds = strong.log_p_pcfg - weak.log_p_pcfg
    else:
        weak_odds = log_odds_from_log(weak.log_p_pcfg)
        strong_odds = log_odds_from_log(strong.log_p_pcfg)

    conflated_odds = add_log_odds(weak_odds, log_odds(q_weak))
    threshold_odds = strong_odds
    if symmetric:
        q_strong = semantic_query_probability(binding, strong.derivation, strong.rule, depth_limit)
        threshold_odds = add_log_odds(strong_odds, log_odds(q_strong))

    if q_weak == 0.5 and (not symmetric or q_strong == 0.5):
        # a neutral knowledge base leaves the syntactic order untouched
        select_weak = weak.log_p_pcfg > strong.log_p_pcfg
    else:
        select_weak = conflated_odds > threshold_odds
    winner = weak if select_weak else strong
    return Comparison(weak, strong, q_weak, from_log_odds(conflated_odds),
                      from_log_odds(threshold_odds), winner, q_strong)


def resolve_ambiguity(candidates: Sequence[AmbiguityCandidate], binding: BridgeBinding,
                      mode: str = LITERAL, depth_limit: int = None,
                      symmetric: bool = False) -> Tuple[AmbiguityCandidate, DecisionRecord]:
    """
    Pick one of >= 2 candidates (sorted best-first). Pairs are compared from the
    weakest upward: the running champion is always the weaker side of the next
    comparison.
    """
    if len(candidates) < 2:
        raise ValueError("ambiguity resolution needs at least two candidates")
    if mode not in (LITERAL, NORMALIZED):
        raise ValueError(f"unknown resolution mode {mode!r}")
    ascending = list(reversed(candidates))
    champion = ascending[0]
    comparisons = []
    for challenger in ascending[1:]:
        comparison = _decide(champion, challenger, binding, mode, depth_limit, symmetric)
        comparisons.append(comparison)
        champion = comparison.winner
    first = candidates[0]
    record = DecisionRecord(first.span, first.rule.lhs, tuple(candidates), tuple(comparisons), champion, mode)
    return champion, record


def parse_with_semantics(g: Pcfg, binding: BridgeBinding, tokens: Sequence[str],
                         mode: str = None, depth_limit: int = None,
                         symmetric: bool = None) -> Tuple[ParseTree, float, DecisionTrace]:
    """
    Parse with knowledge-base guided ambiguity resolution. The returned
    probability is the PCFG probability of the returned tree.
    """
    semantic_config = config_loader.get_semantic_config()
    mode = mode or semantic_config['mode']
    if symmetric is None:
        symmetric = bool(semantic_config['symmetric_query'])
    session = binding.session()
    trace = DecisionTrace()

    def choose(span, nonterminal, ranked: List[CellEntry]) -> CellEntry:
        if len(ranked) < 2:
            return ranked[0]
        derivation = ' '.join(tokens[span[0]:span[1]])
        candidates = [AmbiguityCandidate(e.rule, span, derivation, e.log_probability, e.split) for e in ranked]
        try:
            winner, record = resolve_ambiguity(candidates, session, mode, depth_limit, symmetric)
        except SemanticQueryError:
            raise
        except SsparseError as e:
            raise SemanticQueryError(str(e), span=span, lhs=nonterminal) from e
        trace.records.append(record)
        logger.debug(f"{nonterminal} [{span[0]},{span[1]}): {len(ranked)} candidates, "
                     f"winner {winner.rule}")
        return ranked[candidates.index(winner)]

    chart = fill_chart(g, tokens, choose=choose)
    n = len(tokens)
    top = chart.best(0, n, g.start)
    if top is None:
        raise NoParseError(f"no parse: start symbol {g.start} does not span the sentence")
    tree = chart.build_tree(0, n, g.start)
    logger.info(f"Semantic parse over {n} tokens: {len(trace)} decisions, probability {top.probability:.6e}")
    return tree, top.probability, trace
