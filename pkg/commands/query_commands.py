"""
Query command group: posterior of one grounded random variable
"""
import json
import logging

from services.app_config import Config
from services.bridge import induce_bridge
from services.errors import InputError
from services.inference import infer
from services.mebn import GroundNode, build_ssbn
from utils.input_validator import parse_evidence, validate_entity, validate_identifier

from commands.common import format_probability, load_grammar_file, load_mtheory_file

logger = logging.getLogger(__name__)


def _evidence(specs):
    evidence = {}
    for spec in specs or []:
        parsed, error = parse_evidence(spec)
        if error:
            raise InputError(error)
        variable, args, state = parsed
        evidence[GroundNode(variable, args)] = state
    return evidence


def cmd_query(args) -> int:
    is_valid, error = validate_identifier(args.variable)
    if not is_valid:
        raise InputError(error)
    for entity in args.args:
        is_valid, error = validate_entity(entity)
        if not is_valid:
            raise InputError(error)

    depth_limit = Config.depth_limit(args.depth_limit)
    fmt = Config.output_format(args.format)
    theory = load_mtheory_file(args.mtheory)
    if args.grammar:
        theory, _ = induce_bridge(load_grammar_file(args.grammar), theory)

    target = GroundNode(args.variable, tuple(args.args))
    ssbn = build_ssbn(theory, target, _evidence(args.evidence), depth_limit=depth_limit)
    posterior = infer(ssbn, target)

    if fmt == 'json':
        print(json.dumps({'variable': str(target), 'posterior': posterior}))
    else:
        for state, probability in posterior.items():
            print(f"{state}: {format_probability(probability)}")
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser('query', help='posterior of a grounded random variable')
    parser.add_argument('--mtheory', required=True, metavar='PATH')
    parser.add_argument('--grammar', metavar='PATH', help='bridge the grammar into the theory first')
    parser.add_argument('--evidence', action='append', metavar='VAR(ARGS)=STATE',
                        help='extra evidence; may be repeated')
    parser.add_argument('--depth-limit', dest='depth_limit', metavar='N', default=None)
    parser.add_argument('--format', choices=['tree', 'bracket', 'json'], default=None,
                        help='json prints one object; other formats print one state per line')
    parser.add_argument('variable')
    parser.add_argument('args', nargs='*', metavar='ENTITY')
    parser.set_defaults(func=cmd_query)
