"""
MTheory Loader
Reads and writes the JSON knowledge-base format and validates the result
"""
import json
import logging
from typing import Any, Dict

from services.errors import MTheoryFormatError, MTheoryValidationError
from services.mebn import (BOOLEAN_STATES, CONTEXT, ENTITY_STATES, INPUT, RESIDENT,
                           TRUE_STATE, CptRow, EntityIdentifier, Finding,
                           LocalDistribution, MFrag, MTheory, OrdinaryVariable,
                           RandomVariableTemplate, validate_mtheory)

logger = logging.getLogger(__name__)


def _require(data: Dict[str, Any], key: str, kind, where: str):
    if key not in data:
        raise MTheoryFormatError(f"{where}: missing '{key}'")
    value = data[key]
    if not isinstance(value, kind):
        raise MTheoryFormatError(f"{where}.{key}: expected {kind.__name__}")
    return value


def _string_list(value, where: str) -> tuple:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise MTheoryFormatError(f"{where}: expected a list of strings")
    return tuple(value)


def _number_list(value, where: str) -> tuple:
    if (not isinstance(value, list)
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise MTheoryFormatError(f"{where}: expected a list of numbers")
    return tuple(float(v) for v in value)


def _states(data: dict, where: str):
    states = data.get('states', list(BOOLEAN_STATES))
    if states == ENTITY_STATES:
        return ENTITY_STATES
    return _string_list(states, f"{where}.states")


def _entity(item, where: str) -> EntityIdentifier:
    if isinstance(item, str):
        return EntityIdentifier(item)
    if isinstance(item, dict):
        return EntityIdentifier(_require(item, 'name', str, where), item.get('type'))
    raise MTheoryFormatError(f"{where}: expected a string or an object with 'name'")


def _variable(data, kind: str, where: str) -> RandomVariableTemplate:
    if not isinstance(data, dict):
        raise MTheoryFormatError(f"{where}: expected an object")
    name = _require(data, 'name', str, where)
    args = _string_list(data.get('args', []), f"{where}.args")
    if kind == CONTEXT:
        return RandomVariableTemplate(name, args, BOOLEAN_STATES, CONTEXT,
                                      required_state=data.get('state', TRUE_STATE))
    prior = data.get('prior') if kind == INPUT else None
    return RandomVariableTemplate(
        name, args, _states(data, where), kind,
        parents=_string_list(data.get('parents', []), f"{where}.parents"),
        prior=_number_list(prior, f"{where}.prior") if prior is not None else None)


def _distribution(name: str, cpt, where: str) -> LocalDistribution:
    if cpt is None:
        return None
    if not isinstance(cpt, dict):
        raise MTheoryFormatError(f"{where}.cpt: expected an object")
    rows = []
    for index, row in enumerate(cpt.get('rows', [])):
        row_where = f"{where}.cpt.rows[{index}]"
        given = row.get('given', {}) if isinstance(row, dict) else None
        if not isinstance(given, dict) or not all(isinstance(v, str) for v in given.values()):
            raise MTheoryFormatError(f"{row_where}.given: expected an object of strings")
        rows.append(CptRow.create(given, _number_list(row.get('dist'), f"{row_where}.dist")))
    default = cpt.get('default')
    return LocalDistribution(
        name, tuple(rows),
        _number_list(default, f"{where}.cpt.default") if default is not None else None)


def _mfrag(data, where: str) -> MFrag:
    if not isinstance(data, dict):
        raise MTheoryFormatError(f"{where}: expected an object")
    name = _require(data, 'name', str, where)
    ordinary_vars = []
    for index, ov in enumerate(data.get('ordinary_vars', [])):
        ov_where = f"{where}.ordinary_vars[{index}]"
        if isinstance(ov, str):
            ordinary_vars.append(OrdinaryVariable(ov))
        elif isinstance(ov, dict):
            ordinary_vars.append(OrdinaryVariable(_require(ov, 'name', str, ov_where), ov.get('type')))
        else:
            raise MTheoryFormatError(f"{ov_where}: expected a string or an object")

    context = tuple(_variable(v, CONTEXT, f"{where}.context[{i}]")
                    for i, v in enumerate(data.get('context', [])))
    inputs = tuple(_variable(v, INPUT, f"{where}.inputs[{i}]")
                   for i, v in enumerate(data.get('inputs', [])))
    residents, distributions = [], []
    for index, raw in enumerate(data.get('residents', [])):
        res_where = f"{where}.residents[{index}]"
        rv = _variable(raw, RESIDENT, res_where)
        residents.append(rv)
        cpt = raw.get('cpt')
        if cpt is None and raw.get('prior') is not None:
            # a parentless resident may give its distribution as a prior
            cpt = {'default': raw['prior']}
        dist = _distribution(rv.name, cpt, res_where)
        if dist is not None:
            distributions.append(dist)
    return MFrag(name, tuple(ordinary_vars), context, inputs, tuple(residents), tuple(distributions))


def mtheory_from_dict(data: Dict[str, Any]) -> MTheory:
    """Build an MTheory from decoded JSON without validating invariants"""
    if not isinstance(data, dict):
        raise MTheoryFormatError("MTheory document must be a JSON object")
    entities = tuple(_entity(e, f"entities[{i}]") for i, e in enumerate(data.get('entities', [])))
    mfrags = tuple(_mfrag(m, f"mfrags[{i}]") for i, m in enumerate(data.get('mfrags', [])))
    findings = []
    for index, raw in enumerate(data.get('findings', [])):
        where = f"findings[{index}]"
        if not isinstance(raw, dict):
            raise MTheoryFormatError(f"{where}: expected an object")
        findings.append(Finding(_require(raw, 'variable', str, where),
                                _string_list(raw.get('args', []), f"{where}.args"),
                                _require(raw, 'state', str, where)))
    return MTheory(data.get('name', 'MTheory'), entities, mfrags, tuple(findings))


def read_mtheory(text: str) -> MTheory:
    """Parse knowledge-base content without checking MFrag/MTheory invariants"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise MTheoryFormatError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    return mtheory_from_dict(data)


def load_mtheory(text: str) -> MTheory:
    """Parse and validate knowledge-base content; violations raise MTheoryValidationError"""
    theory = read_mtheory(text)
    violations = validate_mtheory(theory)
    if violations:
        for v in violations:
            logger.debug(f"MTheory violation: {v}")
        raise MTheoryValidationError(violations)
    logger.info(f"Loaded MTheory {theory.name}: {len(theory.mfrags)} MFrags, "
                f"{len(theory.entities)} entities, {len(theory.findings)} findings")
    return theory


# --- Serialization ---

def _variable_to_dict(rv: RandomVariableTemplate, mfrag: MFrag) -> Dict[str, Any]:
    data: Dict[str, Any] = {'name': rv.name, 'args': list(rv.args)}
    if rv.kind == CONTEXT:
        if rv.required_state != TRUE_STATE:
            data['state'] = rv.required_state
        return data
    data['states'] = ENTITY_STATES if rv.entity_valued else list(rv.states)
    if rv.prior is not None:
        data['prior'] = list(rv.prior)
    if rv.kind == RESIDENT:
        data['parents'] = list(rv.parents)
        dist = mfrag.distribution(rv.name)
        if dist is not None:
            cpt: Dict[str, Any] = {'rows': [{'given': row.given_map, 'dist': list(row.dist)}
                                            for row in dist.rows]}
            if dist.default is not None:
                cpt['default'] = list(dist.default)
            data['cpt'] = cpt
    return data


def mtheory_to_dict(t: MTheory) -> Dict[str, Any]:
    return {
        'name': t.name,
        'entities': [e.symbol if e.type is None else {'name': e.symbol, 'type': e.type}
                     for e in t.entities],
        'mfrags': [{
            'name': m.name,
            'ordinary_vars': [{'name': ov.name, 'type': ov.type} if ov.type else {'name': ov.name}
                              for ov in m.ordinary_vars],
            'context': [_variable_to_dict(rv, m) for rv in m.context],
            'inputs': [_variable_to_dict(rv, m) for rv in m.inputs],
            'residents': [_variable_to_dict(rv, m) for rv in m.residents],
        } for m in t.mfrags],
        'findings': [{'variable': f.variable, 'args': list(f.args), 'state': f.state}
                     for f in t.findings],
    }


def serialize_mtheory(t: MTheory) -> str:
    """JSON text that load_mtheory reads back to an equal MTheory"""
    return json.dumps(mtheory_to_dict(t), indent=2) + '\n'
