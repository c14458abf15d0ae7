"""
Inference Service
Exact posterior computation over an SSBN: variable elimination with a
min-degree ordering, and brute-force joint enumeration used as an oracle
"""
import logging
from functools import reduce
from typing import Dict, List, Sequence, Tuple

import numpy as np

from services.config_loader import config_loader
from services.errors import InconsistentEvidenceError, StateSpaceCapError, UnknownVariableError
from services.mebn import GroundNode, Ssbn

logger = logging.getLogger(__name__)


class Factor:
    """A table over an ordered tuple of variables; values has one axis per variable"""

    def __init__(self, variables: Sequence[GroundNode], values: np.ndarray):
        self.variables = tuple(variables)
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != len(self.variables):
            raise ValueError(f"factor over {len(self.variables)} variables has {self.values.ndim} axes")

    def aligned(self, scope: Tuple[GroundNode, ...]) -> np.ndarray:
        """Values transposed into `scope` order with size-1 axes for missing variables"""
        present = [v for v in scope if v in self.variables]
        arr = np.transpose(self.values, [self.variables.index(v) for v in present])
        shape = [arr.shape[present.index(v)] if v in self.variables else 1 for v in scope]
        return arr.reshape(shape)

    def multiply(self, other: 'Factor') -> 'Factor':
        scope = self.variables + tuple(v for v in other.variables if v not in self.variables)
        return Factor(scope, self.aligned(scope) * other.aligned(scope))

    def sum_out(self, variable: GroundNode) -> 'Factor':
        axis = self.variables.index(variable)
        return Factor(self.variables[:axis] + self.variables[axis + 1:], self.values.sum(axis=axis))

    def reduce(self, variable: GroundNode, index: int) -> 'Factor':
        if variable not in self.variables:
            return self
        axis = self.variables.index(variable)
        return Factor(self.variables[:axis] + self.variables[axis + 1:],
                      np.take(self.values, index, axis=axis))


def _factors(n: Ssbn) -> List[Factor]:
    return [Factor(n.parents[node] + (node,), n.cpts[node]) for node in n.nodes]


def _check_target(n: Ssbn, target: GroundNode) -> GroundNode:
    target = GroundNode(target[0], tuple(target[1]))
    if target not in n.states:
        raise UnknownVariableError(f"{target} is not a node of the network")
    return target


def _normalize(values: np.ndarray, n: Ssbn) -> np.ndarray:
    total = values.sum()
    if not total > 0:
        evidence = ', '.join(f"{node}={state}" for node, state in n.evidence.items())
        raise InconsistentEvidenceError(f"evidence has zero probability: {evidence}")
    return values / total


def elimination_order(factors: Sequence[Factor], variables: Sequence[GroundNode]) -> List[GroundNode]:
    """Greedy min-degree order over the interaction graph; ties go to the earlier node"""
    neighbours: Dict[GroundNode, set] = {v: set() for v in variables}
    for factor in factors:
        for v in factor.variables:
            if v in neighbours:
                neighbours[v].update(u for u in factor.variables if u != v)
    remaining = list(variables)
    order = []
    while remaining:
        chosen = min(remaining, key=lambda v: len(neighbours[v]))
        order.append(chosen)
        remaining.remove(chosen)
        linked = neighbours.pop(chosen)
        for u in linked:
            if u in neighbours:
                neighbours[u].discard(chosen)
                neighbours[u].update(w for w in linked if w != u)
    return order


def infer(n: Ssbn, target: GroundNode) -> Dict[str, float]:
    """
    Posterior distribution of target given the network's evidence, by variable
    elimination. Raises InconsistentEvidenceError when the evidence is impossible.
    """
    target = _check_target(n, target)
    factors = _factors(n)
    for node, state in n.evidence.items():
        index = n.state_index(node, state)
        if node == target:
            indicator = np.zeros(n.cardinality(node))
            indicator[index] = 1.0
            factors.append(Factor((node,), indicator))
        else:
            factors = [f.reduce(node, index) for f in factors]

    hidden = [v for v in n.nodes if v != target and v not in n.evidence]
    for variable in elimination_order(factors, hidden):
        involved = [f for f in factors if variable in f.variables]
        if not involved:
            continue
        factors = [f for f in factors if variable not in f.variables]
        factors.append(reduce(Factor.multiply, involved).sum_out(variable))

    result = reduce(Factor.multiply, factors, Factor((), np.array(1.0)))
    values = result.aligned((target,)).reshape(-1)
    posterior = _normalize(values, n)
    logger.debug(f"P({target} | {len(n.evidence)} evidence) = {posterior.tolist()}")
    return dict(zip(n.states[target], posterior.tolist()))


def infer_enumerate(n: Ssbn, target: GroundNode, cap: int = None) -> Dict[str, float]:
    """Posterior by summing the full joint table; refuses joint spaces larger than cap"""
    target = _check_target(n, target)
    if cap is None:
        cap = config_loader.get_mebn_config()['enumeration_state_cap']
    size = 1
    for node in n.nodes:
        size *= n.cardinality(node)
    if size > cap:
        raise StateSpaceCapError(f"joint state space of {size} exceeds the enumeration cap of {cap}")

    scope = tuple(n.nodes)
    joint = np.ones([n.cardinality(node) for node in scope])
    for factor in _factors(n):
        joint = joint * factor.aligned(scope)
    for node, state in n.evidence.items():
        mask = np.zeros(n.cardinality(node))
        mask[n.state_index(node, state)] = 1.0
        joint = joint * Factor((node,), mask).aligned(scope)

    axis = scope.index(target)
    marginal = joint.sum(axis=tuple(a for a in range(len(scope)) if a != axis))
    posterior = _normalize(marginal, n)
    return dict(zip(n.states[target], posterior.tolist()))
