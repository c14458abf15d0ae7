"""
MEBN Service
MTheory / MFrag representation, validation and situation-specific Bayesian
network (SSBN) construction by grounding MFrags on entity identifiers
"""
import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from services.config_loader import config_loader
from services.errors import (GroundingDepthError, MTheoryError,
                             UnknownEntityError, UnknownVariableError)

logger = logging.getLogger(__name__)

CONTEXT = 'context'
INPUT = 'input'
RESIDENT = 'resident'

TRUE_STATE = 'T'
FALSE_STATE = 'F'
BOOLEAN_STATES = (TRUE_STATE, FALSE_STATE)
# state space enumerated from the entity registry at grounding time
ENTITY_STATES = 'entities'
# built-in context constraint: isA(x) holds when x's entity type matches x's declared type
IS_A = 'isA'


@dataclass(frozen=True)
class EntityIdentifier:
    symbol: str
    type: Optional[str] = None

    def __str__(self):
        return self.symbol


@dataclass(frozen=True)
class OrdinaryVariable:
    name: str
    type: Optional[str] = None


@dataclass(frozen=True)
class CptRow:
    """Distribution used when every `given` entry matches (parent state or bound entity)"""
    given: Tuple[Tuple[str, str], ...]
    dist: Tuple[float, ...]

    @classmethod
    def create(cls, given: Dict[str, str], dist: Sequence[float]) -> 'CptRow':
        return cls(tuple(sorted(given.items())), tuple(float(p) for p in dist))

    @property
    def given_map(self) -> Dict[str, str]:
        return dict(self.given)


@dataclass(frozen=True)
class LocalDistribution:
    variable: str
    rows: Tuple[CptRow, ...] = ()
    default: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class RandomVariableTemplate:
    """
    A random variable of an MFrag. Residents list their parents (names of inputs
    or residents of the same MFrag); root inputs may carry a prior; context
    constraints carry the state they require.
    """
    name: str
    args: Tuple[str, ...] = ()
    states: object = BOOLEAN_STATES
    kind: str = RESIDENT
    parents: Tuple[str, ...] = ()
    prior: Optional[Tuple[float, ...]] = None
    required_state: str = TRUE_STATE

    @property
    def entity_valued(self) -> bool:
        return self.states == ENTITY_STATES


@dataclass(frozen=True)
class MFrag:
    name: str
    ordinary_vars: Tuple[OrdinaryVariable, ...] = ()
    context: Tuple[RandomVariableTemplate, ...] = ()
    inputs: Tuple[RandomVariableTemplate, ...] = ()
    residents: Tuple[RandomVariableTemplate, ...] = ()
    distributions: Tuple[LocalDistribution, ...] = ()

    @property
    def edges(self) -> List[Tuple[str, str]]:
        """Dependency graph G as (parent, child) pairs"""
        edges = [(parent, rv.name) for rv in self.residents for parent in rv.parents]
        edges.extend((parent, rv.name) for rv in self.inputs + self.context for parent in rv.parents)
        return edges

    def ordinary_variable(self, name: str) -> Optional[OrdinaryVariable]:
        return next((ov for ov in self.ordinary_vars if ov.name == name), None)

    def variable(self, name: str) -> Optional[RandomVariableTemplate]:
        """Input or resident template declared here"""
        return next((rv for rv in self.residents + self.inputs if rv.name == name), None)

    def resident(self, name: str) -> Optional[RandomVariableTemplate]:
        return next((rv for rv in self.residents if rv.name == name), None)

    def distribution(self, name: str) -> Optional[LocalDistribution]:
        return next((d for d in self.distributions if d.variable == name), None)


@dataclass(frozen=True)
class Finding:
    variable: str
    args: Tuple[str, ...]
    state: str


@dataclass(frozen=True)
class MTheory:
    name: str
    entities: Tuple[EntityIdentifier, ...] = ()
    mfrags: Tuple[MFrag, ...] = ()
    findings: Tuple[Finding, ...] = ()

    @property
    def entity_names(self) -> List[str]:
        return [e.symbol for e in self.entities]

    def entity(self, symbol: str) -> Optional[EntityIdentifier]:
        return next((e for e in self.entities if e.symbol == symbol), None)

    def with_entities(self, extra: Sequence[EntityIdentifier]) -> 'MTheory':
        known = set(self.entity_names)
        added = tuple(e for e in extra if e.symbol not in known)
        return replace(self, entities=self.entities + added) if added else self

    def home_of(self, name: str) -> Optional[Tuple[MFrag, RandomVariableTemplate]]:
        """The MFrag where a variable is resident"""
        for mfrag in self.mfrags:
            rv = mfrag.resident(name)
            if rv is not None:
                return mfrag, rv
        return None

    def root_input(self, name: str) -> Optional[RandomVariableTemplate]:
        """An input declared with a prior and resident nowhere"""
        for mfrag in self.mfrags:
            for rv in mfrag.inputs:
                if rv.name == name and rv.prior is not None:
                    return rv
        return None

    def template(self, name: str) -> Optional[RandomVariableTemplate]:
        home = self.home_of(name)
        return home[1] if home else self.root_input(name)


@dataclass(frozen=True)
class MTheoryViolation:
    mfrag: Optional[str]
    invariant: str
    detail: str = ''

    def __str__(self):
        where = self.mfrag if self.mfrag is not None else '<theory>'
        return f"{where}: {self.invariant}" + (f" ({self.detail})" if self.detail else '')


class GroundNode(NamedTuple):
    """A grounded random variable: template name + entity bindings"""
    name: str
    args: Tuple[str, ...] = ()

    def __str__(self):
        return f"{self.name}({', '.join(self.args)})"


@dataclass(eq=False)
class Ssbn:
    """
    Ground Bayesian network for one query. `nodes` is topologically ordered;
    each CPT has shape (*parent cardinalities, own cardinality).
    """
    query: GroundNode
    nodes: List[GroundNode] = field(default_factory=list)
    parents: Dict[GroundNode, Tuple[GroundNode, ...]] = field(default_factory=dict)
    states: Dict[GroundNode, Tuple[str, ...]] = field(default_factory=dict)
    cpts: Dict[GroundNode, np.ndarray] = field(default_factory=dict)
    evidence: Dict[GroundNode, str] = field(default_factory=dict)

    @property
    def edges(self) -> List[Tuple[GroundNode, GroundNode]]:
        return [(p, node) for node in self.nodes for p in self.parents[node]]

    def cardinality(self, node: GroundNode) -> int:
        return len(self.states[node])

    def state_index(self, node: GroundNode, state: str) -> int:
        try:
            return self.states[node].index(state)
        except ValueError:
            raise MTheoryError(f"state {state!r} is not in the state space of {node}")

    def add_node(self, node, parents, states, cpt) -> None:
        self.nodes.append(node)
        self.parents[node] = tuple(parents)
        self.states[node] = tuple(states)
        self.cpts[node] = cpt

    def violations(self, tolerance: float = 1e-9) -> List[str]:
        """Acyclicity (nodes listed after their parents), row normalization, evidence states"""
        problems = []
        position = {node: index for index, node in enumerate(self.nodes)}
        for node in self.nodes:
            for parent in self.parents[node]:
                if parent not in position or position[parent] >= position[node]:
                    problems.append(f"{node}: parent {parent} breaks topological order")
            cpt = self.cpts[node]
            expected = tuple(self.cardinality(p) for p in self.parents[node]) + (self.cardinality(node),)
            if cpt.shape != expected:
                problems.append(f"{node}: CPT shape {cpt.shape} != {expected}")
                continue
            if np.any(cpt < 0) or not np.allclose(cpt.sum(axis=-1), 1.0, rtol=0, atol=tolerance):
                problems.append(f"{node}: CPT rows are not normalized")
        for node, state in self.evidence.items():
            if node not in self.states or state not in self.states[node]:
                problems.append(f"evidence {node}={state} is not in the node's state space")
        return problems

    def structurally_equal(self, other: 'Ssbn') -> bool:
        return (self.query == other.query
                and self.nodes == other.nodes
                and self.parents == other.parents
                and self.states == other.states
                and self.evidence == other.evidence
                and all(np.array_equal(self.cpts[n], other.cpts[n]) for n in self.nodes))

    def without(self, node: GroundNode) -> 'Ssbn':
        """Copy with a childless node removed"""
        if any(node in ps for ps in self.parents.values()):
            raise MTheoryError(f"{node} has children and cannot be removed")
        clone = Ssbn(self.query)
        for n in self.nodes:
            if n != node:
                clone.add_node(n, self.parents[n], self.states[n], self.cpts[n])
        clone.evidence = {n: s for n, s in self.evidence.items() if n != node}
        return clone


# --- Validation ---

def _is_normalized(dist, tolerance) -> bool:
    return all(p >= 0 for p in dist) and abs(sum(dist) - 1.0) <= tolerance


def _state_list(rv: RandomVariableTemplate, entity_names) -> List[str]:
    return list(entity_names) if rv.entity_valued else list(rv.states)


def _find_cycle(nodes, edges) -> bool:
    children = {n: [] for n in nodes}
    for parent, child in edges:
        children.setdefault(parent, []).append(child)
        children.setdefault(child, [])
    color = {n: 0 for n in children}

    def visit(n):
        color[n] = 1
        for c in children[n]:
            if color[c] == 1 or (color[c] == 0 and visit(c)):
                return True
        color[n] = 2
        return False

    return any(color[n] == 0 and visit(n) for n in list(children))


def _validate_mfrag(mfrag: MFrag, theory: MTheory, tolerance: float) -> List[MTheoryViolation]:
    found = []

    def flag(invariant, detail=''):
        found.append(MTheoryViolation(mfrag.name, invariant, detail))

    ov_names = [ov.name for ov in mfrag.ordinary_vars]
    if len(set(ov_names)) != len(ov_names):
        flag('ordinary-variable', 'duplicate ordinary variable names')

    groups = {CONTEXT: mfrag.context, INPUT: mfrag.inputs, RESIDENT: mfrag.residents}
    seen_kind: Dict[str, str] = {}
    for kind, group in groups.items():
        for rv in group:
            if rv.name in seen_kind:
                flag('disjointness', f"{rv.name} appears as {seen_kind[rv.name]} and {kind}")
            else:
                seen_kind[rv.name] = kind

    entity_names = set(theory.entity_names)
    for rv in mfrag.context + mfrag.inputs + mfrag.residents:
        for arg in rv.args:
            if arg not in ov_names:
                flag('unknown-ordinary-variable', f"{rv.name} uses undeclared {arg}")
        if rv.kind == CONTEXT:
            if tuple(rv.states) != BOOLEAN_STATES:
                flag('state-space', f"context {rv.name} must have states T, F")
            if rv.required_state not in BOOLEAN_STATES:
                flag('state-space', f"context {rv.name} requires state {rv.required_state!r}")
        elif not rv.entity_valued and (len(rv.states) < 2 or len(set(rv.states)) != len(rv.states)):
            flag('state-space', f"{rv.name} needs at least two distinct states")
        if rv.kind != RESIDENT and rv.parents:
            flag('edge-target', f"edges may only point into residents, not {rv.kind} {rv.name}")
        if rv.prior is not None and not rv.entity_valued:
            if len(rv.prior) != len(rv.states) or not _is_normalized(rv.prior, tolerance):
                flag('row-normalization', f"prior of {rv.name}")

    declared = {rv.name: rv for rv in mfrag.inputs + mfrag.residents}
    for rv in mfrag.residents:
        for parent in rv.parents:
            if parent not in declared:
                flag('unknown-parent', f"{rv.name} <- {parent}")
            elif not set(declared[parent].args) <= set(rv.args):
                flag('unbound-argument', f"{parent} uses ordinary variables not bound by {rv.name}")

    resident_names = [rv.name for rv in mfrag.residents]
    if _find_cycle(list(declared), mfrag.edges):
        flag('cycle', 'dependency graph is not acyclic')

    dist_names = [d.variable for d in mfrag.distributions]
    for name in resident_names:
        count = dist_names.count(name)
        if count == 0:
            flag('missing-distribution', name)
        elif count > 1:
            flag('duplicate-distribution', name)
    for name in set(dist_names) - set(resident_names):
        flag('orphan-distribution', name)

    for dist in mfrag.distributions:
        rv = mfrag.resident(dist.variable)
        if rv is None:
            continue
        width = None if rv.entity_valued else len(rv.states)
        rows = [(row.dist, row.given) for row in dist.rows]
        if dist.default is not None:
            rows.append((dist.default, ()))
        bad_rows = 0
        for values, given in rows:
            if width is not None and len(values) != width:
                flag('row-length', f"{rv.name}: {len(values)} values for {width} states")
            elif not _is_normalized(values, tolerance):
                bad_rows += 1
            for key, value in given:
                if key in rv.parents and key in declared:
                    parent = declared[key]
                    if not parent.entity_valued and value not in parent.states:
                        flag('row-value', f"{rv.name}: {key}={value}")
                    elif parent.entity_valued and value not in entity_names:
                        flag('row-value', f"{rv.name}: {key}={value} is not a registered entity")
                elif key in rv.args:
                    if value not in entity_names:
                        flag('row-value', f"{rv.name}: {key}={value} is not a registered entity")
                else:
                    flag('row-key', f"{rv.name}: {key} is neither a parent nor an argument")
        if bad_rows:
            flag('row-normalization', f"{rv.name}: {bad_rows} row(s) do not sum to 1")
    return found


def validate_mtheory(t: MTheory, tolerance: float = None) -> List[MTheoryViolation]:
    """Every broken MFrag / MTheory invariant; empty when the theory is well formed"""
    if tolerance is None:
        tolerance = config_loader.get_mebn_config()['row_tolerance']
    violations: List[MTheoryViolation] = []

    names = t.entity_names
    if any(not n or any(ch.isspace() for ch in n) for n in names):
        violations.append(MTheoryViolation(None, 'entity-registry', 'empty or whitespace entity identifier'))
    if len(set(names)) != len(names):
        violations.append(MTheoryViolation(None, 'entity-registry', 'duplicate entity identifiers'))

    mfrag_names = [m.name for m in t.mfrags]
    if len(set(mfrag_names)) != len(mfrag_names):
        violations.append(MTheoryViolation(None, 'mfrag-name', 'duplicate MFrag names'))

    homes: Dict[str, str] = {}
    for mfrag in t.mfrags:
        violations.extend(_validate_mfrag(mfrag, t, tolerance))
        for rv in mfrag.residents:
            if rv.name in homes:
                violations.append(MTheoryViolation(
                    mfrag.name, 'duplicate-resident', f"{rv.name} is also resident in {homes[rv.name]}"))
            else:
                homes[rv.name] = mfrag.name

    for mfrag in t.mfrags:
        for rv in mfrag.inputs:
            home = t.home_of(rv.name)
            if home is None and rv.prior is None:
                violations.append(MTheoryViolation(
                    mfrag.name, 'unresolved-input', f"{rv.name} is resident nowhere and has no prior"))
            elif home is not None and len(home[1].args) != len(rv.args):
                violations.append(MTheoryViolation(
                    mfrag.name, 'arity', f"{rv.name} takes {len(home[1].args)} arguments"))

    declared_anywhere = {rv.name for m in t.mfrags for rv in m.context + m.inputs + m.residents}
    entity_set = set(names)
    for finding in t.findings:
        if finding.variable not in declared_anywhere:
            violations.append(MTheoryViolation(None, 'finding', f"unknown variable {finding.variable}"))
            continue
        for arg in finding.args:
            if arg not in entity_set:
                violations.append(MTheoryViolation(None, 'finding', f"{finding.variable}: unknown entity {arg}"))
        template = t.template(finding.variable)
        allowed = BOOLEAN_STATES if template is None else _state_list(template, names)
        if finding.state not in allowed:
            violations.append(MTheoryViolation(
                None, 'finding', f"{finding.variable}: state {finding.state!r} not in {list(allowed)}"))
    return violations


# --- SSBN construction ---

class _Grounder:
    """Grounds templates recursively into an Ssbn under a depth limit"""

    def __init__(self, theory: MTheory, depth_limit: int):
        self.theory = theory
        self.depth_limit = depth_limit
        self.entity_names = theory.entity_names
        self.entity_types = {e.symbol: e.type for e in theory.entities}
        self.findings = {GroundNode(f.variable, tuple(f.args)): f.state for f in theory.findings}
        self.grounded: Dict[GroundNode, tuple] = {}
        self.order: List[GroundNode] = []

    def check_node(self, node: GroundNode) -> RandomVariableTemplate:
        template = self.theory.template(node.name)
        if template is None:
            raise UnknownVariableError(f"{node.name} is not resident in any MFrag")
        if len(node.args) != len(template.args):
            raise UnknownVariableError(
                f"{node.name} takes {len(template.args)} arguments, got {len(node.args)}")
        for arg in node.args:
            if arg not in self.entity_types:
                raise UnknownEntityError(f"unknown entity {arg!r}")
        return template

    def context_holds(self, mfrag: MFrag, binding: Dict[str, str]) -> bool:
        for constraint in mfrag.context:
            if any(arg not in binding for arg in constraint.args):
                return False
            if constraint.name == IS_A:
                for arg in constraint.args:
                    ov = mfrag.ordinary_variable(arg)
                    if ov is None or ov.type is None or self.entity_types.get(binding[arg]) != ov.type:
                        return False
                continue
            key = GroundNode(constraint.name, tuple(binding[a] for a in constraint.args))
            if self.findings.get(key) != constraint.required_state:
                return False
        return True

    def ground(self, node: GroundNode, depth: int, stack: Tuple[GroundNode, ...]) -> None:
        if node in self.grounded:
            return
        if node in stack:
            raise GroundingDepthError(f"cyclic grounding through {node}")
        if depth > self.depth_limit:
            raise GroundingDepthError(f"grounding {node} exceeds depth limit {self.depth_limit}")
        template = self.check_node(node)
        states = _state_list(template, self.entity_names)

        home = self.theory.home_of(node.name)
        if home is None:
            cpt = np.array(template.prior, dtype=float)
            if cpt.shape != (len(states),):
                raise MTheoryError(f"prior of {node.name} does not match its {len(states)} states")
            self._commit(node, (), states, cpt)
            return

        mfrag, rv = home
        binding = dict(zip(rv.args, node.args))
        parent_nodes = []
        for parent_name in rv.parents:
            declared = mfrag.variable(parent_name)
            parent = GroundNode(parent_name, tuple(binding[a] for a in declared.args))
            self.ground(parent, depth + 1, stack + (node,))
            parent_nodes.append(parent)

        cpt = self._build_cpt(mfrag, rv, binding, parent_nodes, states)
        self._commit(node, parent_nodes, states, cpt)

    def _build_cpt(self, mfrag, rv, binding, parent_nodes, states) -> np.ndarray:
        dist = mfrag.distribution(rv.name)
        default = dist.default if dist is not None and dist.default is not None else None
        if default is None:
            default = tuple(1.0 / len(states) for _ in states)
        rows = dist.rows if dist is not None else ()
        context_ok = self.context_holds(mfrag, binding)
        if not context_ok and mfrag.context:
            logger.debug(f"context of {mfrag.name} fails for {rv.name}{binding}; using default row")

        parent_states = [self.grounded[p][0] for p in parent_nodes]
        shape = tuple(len(s) for s in parent_states) + (len(states),)
        cpt = np.empty(shape, dtype=float)
        for combo in itertools.product(*[range(len(s)) for s in parent_states]):
            values = default
            if context_ok:
                assignment = {rv.parents[i]: parent_states[i][k] for i, k in enumerate(combo)}
                for row in rows:
                    if all(assignment.get(key, binding.get(key)) == value for key, value in row.given):
                        values = row.dist
                        break
            if len(values) != len(states):
                raise MTheoryError(
                    f"distribution of {rv.name} has {len(values)} values for {len(states)} states")
            cpt[combo] = values
        return cpt

    def _commit(self, node, parents, states, cpt) -> None:
        cpt.setflags(write=False)
        self.grounded[node] = (tuple(states), tuple(parents), cpt)
        self.order.append(node)


def _linked_templates(t: MTheory, name: str) -> set:
    """Template names connected to `name` through MFrag dependency edges, ignoring direction"""
    neighbours: Dict[str, set] = {}
    for mfrag in t.mfrags:
        for parent, child in mfrag.edges:
            neighbours.setdefault(parent, set()).add(child)
            neighbours.setdefault(child, set()).add(parent)
    linked = {name}
    frontier = [name]
    while frontier:
        for other in neighbours.get(frontier.pop(), ()):
            if other not in linked:
                linked.add(other)
                frontier.append(other)
    return linked


def build_ssbn(t: MTheory, query: GroundNode, evidence: Dict[GroundNode, str] = None,
               depth_limit: int = None) -> Ssbn:
    """
    Ground the query, the MTheory findings on templates linked to it and the given
    evidence with all their ancestors, then keep the part connected to the query. Explicit evidence
    overrides findings on the same node.
    """
    if depth_limit is None:
        depth_limit = config_loader.get_mebn_config()['depth_limit']
    if depth_limit < 1:
        raise MTheoryError(f"depth limit must be >= 1, got {depth_limit}")
    query = GroundNode(query[0], tuple(query[1]))
    grounder = _Grounder(t, depth_limit)
    grounder.ground(query, 1, ())

    # findings on context-only variables constrain contexts and are not network nodes;
    # findings on templates unconnected to the query are never grounded
    linked = _linked_templates(t, query.name)
    all_evidence = {node: state for node, state in grounder.findings.items()
                    if node.name in linked and t.template(node.name) is not None}
    for node, state in (evidence or {}).items():
        all_evidence[GroundNode(node[0], tuple(node[1]))] = state
    for node in all_evidence:
        grounder.ground(node, 1, ())

    # weakly connected component of the query
    neighbours: Dict[GroundNode, set] = {n: set() for n in grounder.order}
    for node in grounder.order:
        for parent in grounder.grounded[node][1]:
            neighbours[node].add(parent)
            neighbours[parent].add(node)
    component = {query}
    frontier = [query]
    while frontier:
        current = frontier.pop()
        for other in neighbours[current]:
            if other not in component:
                component.add(other)
                frontier.append(other)

    ssbn = Ssbn(query)
    for node in grounder.order:
        if node in component:
            states, parents, cpt = grounder.grounded[node]
            ssbn.add_node(node, parents, states, cpt)
    for node, state in all_evidence.items():
        if node in component:
            ssbn.state_index(node, state)
            ssbn.evidence[node] = state
    logger.debug(f"SSBN for {query}: {len(ssbn.nodes)} nodes, {len(ssbn.edges)} edges, "
                 f"{len(ssbn.evidence)} evidence")
    return ssbn
