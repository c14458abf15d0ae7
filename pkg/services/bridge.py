"""
Bridge Service
Links a PCFG to an MTheory (nonterminal inputs, the hasProbability resident,
rule and derivation entities) and combines syntactic and semantic evidence
by conflation
"""
import logging
import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.config_loader import config_loader
from services.errors import ConflationError, DerivationError, NameCollisionError
from services.grammar import Pcfg, Rule
from services.inference import infer
from services.mebn import (BOOLEAN_STATES, INPUT, RESIDENT, TRUE_STATE, EntityIdentifier,
                           GroundNode, LocalDistribution, MFrag, MTheory,
                           OrdinaryVariable, RandomVariableTemplate, build_ssbn)

logger = logging.getLogger(__name__)

DERIVATION_TYPE = 'Derivation'
RULE_TYPE = 'Rule'
NON_ALNUM_RE = re.compile(r"[^a-z0-9]+")


def canonicalize(derivation: str) -> str:
    """Lowercase ASCII, non-alphanumeric runs collapsed to '_', trimmed: 'eats fish' -> 'eats_fish'"""
    if not derivation.isascii():
        raise DerivationError(f"derivation {derivation!r} is not ASCII")
    canonical = NON_ALNUM_RE.sub('_', derivation.lower()).strip('_')
    if not canonical:
        raise DerivationError(f"derivation {derivation!r} has no alphanumeric characters")
    return canonical


def rule_entity_name(rule: Rule) -> str:
    """Rules are registered by their lowercased canonical text, e.g. 'vp->vp_pp'"""
    return rule.canonical_text.lower()


@dataclass(frozen=True)
class CombinedProbability:
    syntactic: float
    semantic: float
    conflated: float


@dataclass
class BridgeBinding:
    """
    The bridged theory plus the derivation/rule entity registry. `session()`
    gives a copy whose derivation registrations do not leak into this one.
    """
    theory: MTheory
    nonterminal_inputs: Dict[str, str]
    has_probability: Dict[str, str]
    rule_entities: Dict[Tuple[str, Tuple[str, ...]], str]
    derivations: Dict[str, str] = field(default_factory=dict)
    _extra: List[EntityIdentifier] = field(default_factory=list, repr=False)
    _cached: Optional[MTheory] = field(default=None, repr=False)

    @property
    def query_variable(self) -> str:
        return config_loader.get_semantic_config()['has_probability_name']

    def session(self) -> 'BridgeBinding':
        return replace(self, derivations=dict(self.derivations), _extra=list(self._extra), _cached=None)

    def current_theory(self) -> MTheory:
        """The bridged theory with every derivation registered so far"""
        if self._cached is None:
            self._cached = self.theory.with_entities(self._extra)
        return self._cached

    def rule_entity(self, rule: Rule) -> str:
        try:
            return self.rule_entities[rule.key]
        except KeyError:
            raise DerivationError(f"rule {rule} is not part of the bridged grammar")

    def register(self, derivation: str) -> EntityIdentifier:
        canonical = canonicalize(derivation)
        for text, known in self.derivations.items():
            if known == canonical and text != derivation:
                raise DerivationError(
                    f"derivations {text!r} and {derivation!r} both canonicalize to {canonical!r}")
        if derivation not in self.derivations:
            self.derivations[derivation] = canonical
            if self.theory.entity(canonical) is None and all(e.symbol != canonical for e in self._extra):
                self._extra.append(EntityIdentifier(canonical, DERIVATION_TYPE))
                self._cached = None
        existing = self.theory.entity(canonical)
        return existing if existing is not None else EntityIdentifier(canonical, DERIVATION_TYPE)


def _fresh_name(base: str, taken) -> str:
    name, suffix = base, 1
    while name in taken:
        name = f"{base}_{suffix}"
        suffix += 1
    return name


def _ordinary_var(mfrag: MFrag, type_name: str, base: str) -> Tuple[MFrag, str]:
    """An ordinary variable of the given type, declared if the MFrag has none"""
    for ov in mfrag.ordinary_vars:
        if ov.type == type_name:
            return mfrag, ov.name
    name = _fresh_name(base, {ov.name for ov in mfrag.ordinary_vars})
    return replace(mfrag, ordinary_vars=mfrag.ordinary_vars + (OrdinaryVariable(name, type_name),)), name


def _add_has_probability(mfrag: MFrag, name: str) -> MFrag:
    mfrag, d = _ordinary_var(mfrag, DERIVATION_TYPE, 'd')
    mfrag, r = _ordinary_var(mfrag, RULE_TYPE, 'r')
    neutral = tuple(config_loader.get_semantic_config()['neutral_row'])
    resident = RandomVariableTemplate(name, (d, r), BOOLEAN_STATES, RESIDENT)
    return replace(mfrag,
                   residents=mfrag.residents + (resident,),
                   distributions=mfrag.distributions + (LocalDistribution(name, (), neutral),))


def induce_bridge(g: Pcfg, t: MTheory) -> Tuple[MTheory, BridgeBinding]:
    """
    Extend t so that every nonterminal is an input variable and every MFrag has
    a hasProbability(derivation, rule) resident, and register rule entities.
    Applying it to its own output changes nothing.
    """
    base_name = config_loader.get_semantic_config()['has_probability_name']
    mfrags = list(t.mfrags) or [MFrag('Bridge')]

    variable_kinds: Dict[str, str] = {}
    for m in mfrags:
        for rv in m.context + m.inputs + m.residents:
            variable_kinds.setdefault(rv.name, rv.kind)
    for nonterminal in g.nonterminal_names:
        kind = variable_kinds.get(nonterminal)
        if kind is not None and kind != INPUT:
            raise NameCollisionError(f"nonterminal {nonterminal} is already a {kind} variable")
        if nonterminal == base_name:
            raise NameCollisionError(f"nonterminal {nonterminal} collides with the query variable")

    # the primary MFrag holds the plain-named query variable and the nonterminal inputs
    primary = next((i for i, m in enumerate(mfrags) if m.resident(base_name) is not None), 0)
    resident_names = {rv.name for m in mfrags for rv in m.residents}
    if base_name in variable_kinds and variable_kinds[base_name] != RESIDENT:
        raise NameCollisionError(f"{base_name} is already a {variable_kinds[base_name]} variable")

    has_probability: Dict[str, str] = {}
    for index, m in enumerate(mfrags):
        own_name = re.compile(rf"{re.escape(base_name)}(_{re.escape(m.name)}(_\d+)?)?")
        existing = next((rv.name for rv in m.residents if own_name.fullmatch(rv.name)), None)
        if existing is not None:
            has_probability[m.name] = existing
            continue
        name = base_name if index == primary else _fresh_name(f"{base_name}_{m.name}", resident_names)
        resident_names.add(name)
        mfrags[index] = _add_has_probability(m, name)
        has_probability[m.name] = name

    inputs = {rv.name for m in mfrags for rv in m.inputs}
    missing = [nt for nt in g.nonterminal_names if nt not in inputs]
    if missing:
        m = mfrags[primary]
        query = m.resident(has_probability[m.name])
        derivation_var = query.args[0] if query.args else None
        if derivation_var is None:
            m, derivation_var = _ordinary_var(m, DERIVATION_TYPE, 'd')
        uniform = tuple(1.0 / len(BOOLEAN_STATES) for _ in BOOLEAN_STATES)
        added = tuple(RandomVariableTemplate(nt, (derivation_var,), BOOLEAN_STATES, INPUT, prior=uniform)
                      for nt in missing)
        mfrags[primary] = replace(m, inputs=m.inputs + added)
    nonterminal_inputs = {nt: nt for nt in g.nonterminal_names}

    rule_entities: Dict[Tuple[str, Tuple[str, ...]], str] = {}
    entities: List[EntityIdentifier] = []
    claimed: Dict[str, Rule] = {}
    for rule in g.rules:
        name = rule_entity_name(rule)
        if name in claimed:
            raise NameCollisionError(f"rules {claimed[name]} and {rule} share the entity {name!r}")
        claimed[name] = rule
        rule_entities[rule.key] = name
        entities.append(EntityIdentifier(name, RULE_TYPE))

    bridged = replace(t, mfrags=tuple(mfrags)).with_entities(entities)
    if bridged == t:
        bridged = t
    binding = BridgeBinding(bridged, nonterminal_inputs, has_probability, rule_entities)
    logger.info(f"Bridged {len(g.nonterminal_names)} nonterminals and {len(g.rules)} rules "
                f"into MTheory {t.name} ({len(mfrags)} MFrags)")
    return bridged, binding


def register_derivation(b: BridgeBinding, derivation: str) -> EntityIdentifier:
    """Register a word sequence as a Derivation entity; the same text always maps to the same entity"""
    return b.register(derivation)


# --- Conflation ---

def _check_probability(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise ConflationError(f"{name}={value} is not a probability")
    return value


def conflate(p: float, q: float) -> float:
    """Normalized product of two binary distributions (p, 1-p) and (q, 1-q)"""
    p = _check_probability(p, 'p')
    q = _check_probability(q, 'q')
    if q == 0.5:
        return p
    if p == 0.5:
        return q
    numerator = p * q
    denominator = numerator + (1.0 - p) * (1.0 - q)
    if denominator == 0.0:
        raise ConflationError(f"distributions ({p}, {1 - p}) and ({q}, {1 - q}) are contradictory")
    return numerator / denominator


def conflate_distributions(distributions: Sequence[Sequence[float]]) -> np.ndarray:
    """Elementwise product of k probability vectors, renormalized"""
    arr = np.asarray(distributions, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
        raise ConflationError("expected one or more probability vectors of length >= 2")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ConflationError("probability vectors must lie in [0, 1]")
    product = np.prod(arr, axis=0)
    total = product.sum()
    if total == 0.0:
        raise ConflationError("distributions are contradictory: the product is zero everywhere")
    return product / total


def combined_rule_probability(syntactic: float, semantic: float) -> CombinedProbability:
    return CombinedProbability(syntactic, semantic, conflate(syntactic, semantic))


def log_odds(q: float) -> float:
    """log(q / (1 - q)) with infinite values at 0 and 1"""
    q = _check_probability(q, 'q')
    if q == 0.0:
        return -math.inf
    if q == 1.0:
        return math.inf
    return math.log(q) - math.log1p(-q)


def log_odds_from_log(log_p: float) -> float:
    """log-odds of p = exp(log_p); exact for probabilities that underflow in linear space"""
    if log_p > 0:
        raise ConflationError(f"log probability {log_p} is positive")
    if log_p == 0.0:
        return math.inf
    return log_p - math.log1p(-math.exp(log_p))


def add_log_odds(x: float, y: float) -> float:
    """Conflation in log-odds space: the log-odds of the product distribution"""
    if math.isinf(x) and math.isinf(y) and x != y:
        raise ConflationError("a certain and an impossible distribution are contradictory")
    return x + y


def from_log_odds(z: float) -> float:
    if z == math.inf:
        return 1.0
    if z == -math.inf:
        return 0.0
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


# --- Semantic queries ---

def semantic_query_probability(b: BridgeBinding, derivation: str, rule: Rule,
                               depth_limit: int = None) -> float:
    """P(hasProbability(derivation, rule) = T) given the theory's findings"""
    derivation_entity = b.register(derivation)
    rule_entity = b.rule_entity(rule)
    query = GroundNode(b.query_variable, (derivation_entity.symbol, rule_entity))
    ssbn = build_ssbn(b.current_theory(), query, depth_limit=depth_limit)
    posterior = infer(ssbn, query)[TRUE_STATE]
    logger.debug(f"semantic query {query}: {posterior:.6g}")
    return posterior
