"""
Unit tests for the Grammar Service
Tests loading, serialization, normalization checks and rule lookup
"""

import pytest

from services.errors import GrammarError, GrammarSyntaxError, UnknownSymbolError
from services.grammar import (Pcfg, Rule, Symbol, load_grammar, rules_for,
                              serialize_grammar, validate_normalization)


@pytest.mark.unit
class TestLoadGrammar:
    """Test grammar file parsing"""

    def test_pp_grammar_shape(self, pp_grammar):
        """Eleven rules, six nonterminals, start symbol S"""
        assert len(pp_grammar.rules) == 11
        assert {s.name for s in pp_grammar.nonterminals} == {'S', 'NP', 'VP', 'PP', 'V', 'P'}
        assert pp_grammar.terminal_names == {'Alex', 'eats', 'fish', 'eggs', 'fork', 'with'}
        assert pp_grammar.start == 'S'

    def test_rules_keep_file_order(self, pp_grammar):
        """Rules appear in the order of the file"""
        assert str(pp_grammar.rules[0]) == 'S -> NP VP'
        assert str(pp_grammar.rules[-1]) == "P -> 'with'"

    def test_comments_and_blank_lines_ignored(self):
        """Comment-only and blank lines are skipped; trailing comments are stripped"""
        g = load_grammar("# header\n\nS -> A A 1.0  # binary\nA -> 'a' 1.0\n")
        assert len(g.rules) == 2

    def test_start_directive(self):
        """%start overrides the first rule's lhs"""
        g = load_grammar("A -> 'a' 1.0\n%start S\nS -> A A 1.0\n")
        assert g.start == 'S'

    def test_non_cnf_rule_rejected_with_line(self):
        """A three-symbol RHS is a syntax error on its line"""
        with pytest.raises(GrammarSyntaxError) as exc_info:
            load_grammar("S -> NP VP 1.0\nS -> NP VP PP 0.2\n")
        assert exc_info.value.line_number == 2

    def test_mixed_terminal_rule_rejected(self):
        """A terminal next to a nonterminal is not CNF"""
        with pytest.raises(GrammarSyntaxError):
            load_grammar("S -> 'a' B 1.0\n")

    def test_bad_probability_rejected(self):
        """Probabilities must parse and lie in (0, 1]"""
        for text in ("S -> A B x\n", "S -> A B 0\n", "S -> A B 1.5\n"):
            with pytest.raises(GrammarSyntaxError):
                load_grammar(text)

    def test_duplicate_rule_rejected(self):
        """The same lhs/rhs pair twice is an error"""
        with pytest.raises(GrammarSyntaxError) as exc_info:
            load_grammar("S -> A A 0.5\nS -> A A 0.5\nA -> 'a' 1.0\n")
        assert exc_info.value.line_number == 2

    def test_empty_grammar_rejected(self):
        """A file without rules is an error"""
        with pytest.raises(GrammarSyntaxError):
            load_grammar("# nothing here\n")

    def test_symbol_both_terminal_and_nonterminal(self):
        """Terminals and nonterminals must be disjoint"""
        with pytest.raises(GrammarSyntaxError):
            load_grammar("S -> A A 1.0\nA -> 'S' 1.0\n")


@pytest.mark.unit
class TestGrammarTypes:
    """Test Symbol / Rule / Pcfg invariants"""

    def test_symbol_rejects_whitespace(self):
        """Symbol names are non-empty and contain no whitespace"""
        with pytest.raises(GrammarError):
            Symbol('has space')

    def test_rule_probability_range(self):
        """Rule probabilities lie in (0, 1]"""
        with pytest.raises(GrammarError):
            Rule('S', ('A', 'B'), 0.0)

    def test_canonical_text(self):
        """Binary rules render as lhs->B_C"""
        assert Rule('VP', ('VP', 'PP'), 0.3).canonical_text == 'VP->VP_PP'

    def test_lookup_indices(self, pp_grammar):
        """Lexicon and binary indices return rules by RHS"""
        assert [r.lhs for r in pp_grammar.lexical_rules('fish')] == ['NP']
        assert [r.lhs for r in pp_grammar.binary_rules('NP', 'PP')] == ['NP']
        assert pp_grammar.lexical_rules('telescope') == ()

    def test_nonterminal_order(self, pp_grammar):
        """Nonterminals are listed by first appearance"""
        assert pp_grammar.nonterminal_names == ['S', 'NP', 'VP', 'PP', 'P', 'V']


@pytest.mark.unit
class TestSerialization:
    """Test writing grammars back to file format"""

    def test_round_trip(self, pp_grammar):
        """load_grammar(serialize_grammar(g)) has the same rule list"""
        reloaded = load_grammar(serialize_grammar(pp_grammar))
        assert reloaded.rules == pp_grammar.rules
        assert reloaded.start == pp_grammar.start

    def test_round_trip_random(self, rng, random_grammar):
        """Round trip preserves full-precision probabilities"""
        for _ in range(20):
            g = random_grammar(rng)
            assert load_grammar(serialize_grammar(g)).rules == g.rules

    def test_start_directive_written(self):
        """%start is emitted when the start symbol is not the first lhs"""
        g = Pcfg.from_rules([Rule('A', ('a',), 1.0, lexical=True), Rule('S', ('A', 'A'), 1.0)], start='S')
        text = serialize_grammar(g)
        assert text.startswith('%start S\n')
        assert load_grammar(text).start == 'S'


@pytest.mark.unit
class TestNormalization:
    """Test per-lhs probability sums"""

    def test_pp_grammar_normalized(self, pp_grammar):
        """The worked grammar sums to 1 for every nonterminal"""
        assert validate_normalization(pp_grammar) == []

    def test_vp_sum_point_nine(self):
        """VP rules 0.7 + 0.2 produce one violation with sum 0.9"""
        g = load_grammar("VP -> V NP 0.7\nVP -> VP PP 0.2\nV -> 'v' 1.0\nNP -> 'n' 1.0\nPP -> 'p' 1.0\n")
        violations = validate_normalization(g)
        assert len(violations) == 1
        assert violations[0].nonterminal == 'VP'
        assert violations[0].sum == pytest.approx(0.9)

    def test_perturbation_detected(self, pp_grammar_text):
        """Adding 1e-6 to one rule yields exactly one violation"""
        perturbed = pp_grammar_text.replace("NP -> 'eggs' 0.1", "NP -> 'eggs' 0.100001")
        violations = validate_normalization(load_grammar(perturbed))
        assert [v.nonterminal for v in violations] == ['NP']

    def test_random_grammars_normalized(self, rng, random_grammar):
        """Generated grammars sum to 1 within tolerance"""
        for _ in range(20):
            assert validate_normalization(random_grammar(rng)) == []


@pytest.mark.unit
class TestRulesFor:
    """Test rule lookup by lhs"""

    def test_vp_rules(self, pp_grammar):
        """VP rules in file order"""
        assert [(str(r), r.probability) for r in rules_for(pp_grammar, 'VP')] == [
            ('VP -> V NP', 0.7), ('VP -> VP PP', 0.3)]

    def test_s_rules(self, pp_grammar):
        """S has a single rule"""
        assert [str(r) for r in rules_for(pp_grammar, 'S')] == ['S -> NP VP']

    def test_unknown_symbol(self, pp_grammar):
        """Unknown nonterminals raise"""
        with pytest.raises(UnknownSymbolError):
            rules_for(pp_grammar, 'X')
