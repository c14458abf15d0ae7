"""
Parse Tree
Derivation tree type plus bracketed / ascii / json renderers and readers
"""
import json
import re
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

from services.errors import ParseError, TreeRuleError
from services.grammar import NONTERMINAL, TERMINAL, Pcfg, Rule, Symbol

FORMATS = ('bracketed', 'ascii', 'json')
BRACKET_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


@dataclass(frozen=True)
class ParseTree:
    """
    A node of a derivation. Leaves carry terminals and have no rule; internal
    nodes carry nonterminals, the rule applied and one (lexical) or two children.
    """
    symbol: Symbol
    span: Tuple[int, int]
    children: Tuple['ParseTree', ...] = ()
    rule: Optional[Rule] = None

    @classmethod
    def leaf(cls, token: str, position: int) -> 'ParseTree':
        return cls(Symbol(token, TERMINAL), (position, position + 1))

    @classmethod
    def node(cls, rule: Rule, children) -> 'ParseTree':
        children = tuple(children)
        return cls(Symbol(rule.lhs, NONTERMINAL),
                   (children[0].span[0], children[-1].span[1]), children, rule)

    @property
    def label(self) -> str:
        return self.symbol.name

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self) -> List[str]:
        """Yield (left-to-right leaves) of the tree"""
        if self.is_leaf:
            return [self.label]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def internal_nodes(self) -> Iterator['ParseTree']:
        """Preorder walk over nonterminal nodes"""
        if self.is_leaf:
            return
        yield self
        for child in self.children:
            yield from child.internal_nodes()

    def derivation_key(self, g: Pcfg) -> Tuple[Tuple[int, int], ...]:
        """Preorder (rule index, split) sequence; orders equal-probability trees like the chart tie-break"""
        key = []
        for node in self.internal_nodes():
            split = node.children[0].span[1] if len(node.children) == 2 else -1
            key.append((g.rule_index(node.rule), split))
        return tuple(key)

    def check(self) -> None:
        """Raise ParseError unless spans partition contiguously and labels match rules"""
        if self.is_leaf:
            if self.symbol.kind != TERMINAL or self.span[1] - self.span[0] != 1:
                raise ParseError(f"malformed leaf {self.label!r} at {self.span}")
            return
        if self.symbol.kind != NONTERMINAL or len(self.children) not in (1, 2):
            raise ParseError(f"malformed node {self.label!r} at {self.span}")
        if self.children[0].span[0] != self.span[0] or self.children[-1].span[1] != self.span[1]:
            raise ParseError(f"children of {self.label} do not cover {self.span}")
        if len(self.children) == 2 and self.children[0].span[1] != self.children[1].span[0]:
            raise ParseError(f"children of {self.label} are not contiguous")
        if len(self.children) == 1 and not self.children[0].is_leaf:
            raise ParseError(f"unary node {self.label} must dominate a terminal")
        for child in self.children:
            child.check()


def rule_key_of(node: ParseTree) -> Tuple[str, Tuple[str, ...]]:
    return node.label, tuple(child.label for child in node.children)


def attach_rules(t: ParseTree, g: Pcfg) -> ParseTree:
    """Rebuild a tree with rules looked up in g by node shape"""
    if t.is_leaf:
        return t
    lhs, rhs = rule_key_of(t)
    rule = g.find_rule(lhs, rhs)
    if rule is None or rule.lexical != t.children[0].is_leaf:
        raise TreeRuleError(f"rule {lhs} -> {' '.join(rhs)} is not in the grammar")
    return ParseTree(t.symbol, t.span, tuple(attach_rules(c, g) for c in t.children), rule)


# --- Renderers ---

def to_bracketed(t: ParseTree) -> str:
    if t.is_leaf:
        return t.label
    return f"({t.label} {' '.join(to_bracketed(c) for c in t.children)})"


def _ascii_lines(t: ParseTree, prefix: str, is_last: bool, is_root: bool) -> List[str]:
    connector = '' if is_root else ('└── ' if is_last else '├── ')
    text = t.label if t.is_leaf else f"{t.label} [{t.span[0]},{t.span[1]})"
    lines = [prefix + connector + text]
    child_prefix = prefix if is_root else prefix + ('    ' if is_last else '│   ')
    for index, child in enumerate(t.children):
        lines.extend(_ascii_lines(child, child_prefix, index == len(t.children) - 1, False))
    return lines


def to_ascii(t: ParseTree) -> str:
    return '\n'.join(_ascii_lines(t, '', True, True))


def to_dict(t: ParseTree) -> dict:
    data = {'label': t.label, 'span': [t.span[0], t.span[1]]}
    if t.rule is not None:
        data['rule'] = {'lhs': t.rule.lhs, 'rhs': list(t.rule.rhs), 'prob': t.rule.probability}
    data['children'] = [to_dict(c) for c in t.children]
    return data


def render_tree(t: ParseTree, format: str = 'bracketed') -> str:
    """Render a tree as Penn-style brackets, an indented ascii tree, or json"""
    if format == 'bracketed':
        return to_bracketed(t)
    if format == 'ascii':
        return to_ascii(t)
    if format == 'json':
        return json.dumps(to_dict(t))
    raise ValueError(f"unknown tree format {format!r}; expected one of {FORMATS}")


# --- Readers ---

def tree_from_dict(data: dict) -> ParseTree:
    children = tuple(tree_from_dict(c) for c in data.get('children', []))
    span = (int(data['span'][0]), int(data['span'][1]))
    if not children:
        return ParseTree(Symbol(data['label'], TERMINAL), span)
    rule = None
    if data.get('rule') is not None:
        r = data['rule']
        rule = Rule(r['lhs'], tuple(r['rhs']), float(r['prob']), lexical=children[0].is_leaf)
    return ParseTree(Symbol(data['label'], NONTERMINAL), span, children, rule)


def parse_tree_from_json(text: str) -> ParseTree:
    try:
        return tree_from_dict(json.loads(text))
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ParseError(f"invalid tree json: {e}") from e


def parse_bracketed(text: str, g: Optional[Pcfg] = None) -> ParseTree:
    """Read a Penn-style bracketed tree; with a grammar, rules are attached to the nodes"""
    tokens = BRACKET_TOKEN_RE.findall(text)
    position = 0
    leaf_index = 0

    def read():
        nonlocal position, leaf_index
        if position >= len(tokens):
            raise ParseError("unexpected end of bracketed tree")
        tok = tokens[position]
        position += 1
        if tok == ')':
            raise ParseError("unexpected ')'")
        if tok != '(':
            leaf = ParseTree.leaf(tok, leaf_index)
            leaf_index += 1
            return leaf
        if position >= len(tokens) or tokens[position] in '()':
            raise ParseError("missing label after '('")
        label = tokens[position]
        position += 1
        children = []
        while position < len(tokens) and tokens[position] != ')':
            children.append(read())
        if position >= len(tokens):
            raise ParseError("unbalanced brackets")
        position += 1
        if not children:
            raise ParseError(f"node {label} has no children")
        return ParseTree(Symbol(label, NONTERMINAL),
                         (children[0].span[0], children[-1].span[1]), tuple(children))

    tree = read()
    if position != len(tokens):
        raise ParseError("trailing text after bracketed tree")
    return attach_rules(tree, g) if g is not None else tree
