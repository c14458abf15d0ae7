"""
Services Package
Grammar, chart parsing, MEBN knowledge base and semantic parsing services
"""

# Configuration
from services.config_loader import config_loader, ConfigLoader

# Grammar
from services.grammar import (
    Pcfg,
    Rule,
    Symbol,
    load_grammar,
    rules_for,
    serialize_grammar,
    validate_normalization
)

# Parsing
from services.parse_tree import ParseTree, parse_bracketed, parse_tree_from_json, render_tree
from services.chart_parser import (
    build_chart,
    enumerate_parses,
    inside_probability,
    tree_probability,
    viterbi_parse
)

# Knowledge base
from services.mebn import GroundNode, MTheory, Ssbn, build_ssbn, validate_mtheory
from services.mtheory_loader import load_mtheory, serialize_mtheory
from services.inference import infer, infer_enumerate

# Bridge / semantic parsing
from services.bridge import (
    BridgeBinding,
    conflate,
    conflate_distributions,
    combined_rule_probability,
    induce_bridge,
    register_derivation,
    semantic_query_probability
)
from services.ssparser import DecisionTrace, parse_with_semantics, resolve_ambiguity

__all__ = [
    'config_loader', 'ConfigLoader',
    'Pcfg', 'Rule', 'Symbol', 'load_grammar', 'rules_for', 'serialize_grammar', 'validate_normalization',
    'ParseTree', 'parse_bracketed', 'parse_tree_from_json', 'render_tree',
    'build_chart', 'enumerate_parses', 'inside_probability', 'tree_probability', 'viterbi_parse',
    'GroundNode', 'MTheory', 'Ssbn', 'build_ssbn', 'validate_mtheory',
    'load_mtheory', 'serialize_mtheory', 'infer', 'infer_enumerate',
    'BridgeBinding', 'conflate', 'conflate_distributions', 'combined_rule_probability',
    'induce_bridge', 'register_derivation', 'semantic_query_probability',
    'DecisionTrace', 'parse_with_semantics', 'resolve_ambiguity',
]
