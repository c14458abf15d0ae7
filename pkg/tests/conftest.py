"""
Pytest configuration and fixtures for ssparse tests
"""

import itertools
import os
import random
import sys

import pytest

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from services.grammar import Pcfg, Rule, load_grammar
from services.mtheory_loader import load_mtheory, mtheory_from_dict

EXAMPLES_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'config', 'examples'))

S1 = "Alex eats fish with fork"
S2 = "Alex eats fish with eggs"


def _read(name):
    with open(os.path.join(EXAMPLES_DIR, name), 'r', encoding='utf-8') as f:
        return f.read()


@pytest.fixture
def examples_dir():
    return EXAMPLES_DIR


@pytest.fixture
def pp_grammar_text():
    """The eleven-rule PP-attachment grammar in file format."""
    return _read('pp_attachment.cfg')


@pytest.fixture
def pp_grammar(pp_grammar_text):
    return load_grammar(pp_grammar_text)


@pytest.fixture
def instrument_theory_text():
    return _read('instrument_kb.json')


@pytest.fixture
def instrument_theory(instrument_theory_text):
    """KB believing 'eats fish with fork' is instrumental (posterior 0.7 for VP attachment)."""
    return load_mtheory(instrument_theory_text)


@pytest.fixture
def empty_theory():
    return load_mtheory(_read('empty_kb.json'))


def make_posterior_theory(q):
    """KB whose hasProbability posterior is q for every derivation and rule."""
    return mtheory_from_dict({
        'name': f'Constant{q}',
        'entities': [],
        'mfrags': [{
            'name': 'PPAttachment',
            'ordinary_vars': [{'name': 'd', 'type': 'Derivation'}, {'name': 'r', 'type': 'Rule'}],
            'residents': [{
                'name': 'hasProbability', 'args': ['d', 'r'], 'states': ['T', 'F'], 'parents': [],
                'cpt': {'rows': [], 'default': [q, 1.0 - q]},
            }],
        }],
        'findings': [],
    })


@pytest.fixture
def posterior_theory():
    """Factory: q -> MTheory with a constant hasProbability posterior."""
    return make_posterior_theory


def _random_distribution(rng, size):
    weights = [rng.gammavariate(1.0, 1.0) + 1e-3 for _ in range(size)]
    total = sum(weights)
    return [w / total for w in weights]


DYADIC_SPLITS = {
    2: [0.5, 0.5],
    3: [0.5, 0.25, 0.25],
    4: [0.25, 0.25, 0.25, 0.25],
    5: [0.25, 0.25, 0.25, 0.125, 0.125],
}


def _dyadic_distribution(rng, size):
    """Powers of two: equal-probability derivations tie exactly in both arithmetic modes."""
    split = list(DYADIC_SPLITS[size])
    rng.shuffle(split)
    return split


def make_random_grammar(rng, n_nonterminals=4, n_terminals=4, dyadic=False):
    """
    Random normalized CNF grammar; every nonterminal has at least one lexical rule.
    With dyadic=True every rule probability is a power of two, so ties are common.
    """
    distribution = _dyadic_distribution if dyadic else _random_distribution
    nonterminals = [f'N{i}' for i in range(n_nonterminals)]
    terminals = [f'w{i}' for i in range(n_terminals)]
    rules = []
    for lhs in nonterminals:
        binary = rng.sample(list(itertools.product(nonterminals, nonterminals)), rng.randint(1, 3))
        lexical = rng.sample(terminals, rng.randint(1, 2))
        shapes = [(tuple(pair), False) for pair in binary] + [((w,), True) for w in lexical]
        for (rhs, is_lexical), p in zip(shapes, distribution(rng, len(shapes))):
            rules.append(Rule(lhs, rhs, p, lexical=is_lexical))
    return Pcfg.from_rules(rules, start='N0')


def random_sentence(rng, grammar, max_length=6):
    """Random sequence of known terminals (may have no complete parse)."""
    terminals = sorted(grammar.terminal_names)
    return [rng.choice(terminals) for _ in range(rng.randint(1, max_length))]


def sample_sentence(rng, grammar, max_length=10):
    """Sentence generated top-down from the grammar, retried until short enough."""
    while True:
        tokens = []

        def expand(symbol, depth):
            if len(tokens) > max_length or depth > 30:
                raise OverflowError
            rules = grammar.lhs_rules(symbol)
            rule = rng.choices(rules, weights=[r.probability for r in rules])[0]
            if rule.lexical:
                tokens.append(rule.rhs[0])
            else:
                for child in rule.rhs:
                    expand(child, depth + 1)

        try:
            expand(grammar.start, 0)
        except OverflowError:
            continue
        if len(tokens) <= max_length:
            return tokens


def make_random_theory(rng, n_nodes=6, max_parents=3, evidence_fraction=0.3):
    """
    Random single-MFrag theory of arity-0 residents forming a DAG with strictly
    positive CPTs, plus random findings. Returns (theory, node names).
    """
    names = [f'X{i}' for i in range(n_nodes)]
    residents = []
    for index, name in enumerate(names):
        states = ['s0', 's1'] if rng.random() < 0.7 else ['s0', 's1', 's2']
        parents = rng.sample(names[:index], min(index, rng.randint(0, max_parents)))
        residents.append({'name': name, 'args': [], 'states': states, 'parents': parents})
    by_name = {r['name']: r for r in residents}
    for resident in residents:
        parent_states = [by_name[p]['states'] for p in resident['parents']]
        rows = []
        for combo in itertools.product(*parent_states):
            rows.append({'given': dict(zip(resident['parents'], combo)),
                         'dist': _random_distribution(rng, len(resident['states']))})
        resident['cpt'] = {'rows': rows, 'default': _random_distribution(rng, len(resident['states']))}
    findings = [{'variable': r['name'], 'args': [], 'state': rng.choice(r['states'])}
                for r in residents if rng.random() < evidence_fraction]
    theory = mtheory_from_dict({
        'name': 'Random',
        'entities': [],
        'mfrags': [{'name': 'Net', 'ordinary_vars': [], 'residents': residents}],
        'findings': findings,
    })
    return theory, names


@pytest.fixture
def rng():
    return random.Random(20240607)


@pytest.fixture
def random_grammar():
    return make_random_grammar


@pytest.fixture
def random_theory():
    return make_random_theory


@pytest.fixture
def random_tokens():
    return random_sentence


@pytest.fixture
def grammar_sampler():
    return sample_sentence
