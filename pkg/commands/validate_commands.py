"""
Validate command group: grammar normalization, MTheory invariants and bridge induction
"""
import logging

from services.bridge import induce_bridge
from services.errors import BridgeError, InputError
from services.grammar import validate_normalization
from services.mebn import validate_mtheory
from services.mtheory_loader import read_mtheory, serialize_mtheory

from commands.common import EXIT_FAILURE, EXIT_OK, load_grammar_file, read_text

logger = logging.getLogger(__name__)


def cmd_validate(args) -> int:
    """Print every violation found (or OK); exit 1 when there are violations"""
    if not args.grammar and not args.mtheory:
        raise InputError("validate needs --grammar and/or --mtheory")
    if args.write_bridged and not (args.grammar and args.mtheory):
        raise InputError("--write-bridged needs both --grammar and --mtheory")

    problems = []
    grammar = theory = None
    if args.grammar:
        grammar = load_grammar_file(args.grammar)
        problems.extend(f"grammar: {v}" for v in validate_normalization(grammar))
    if args.mtheory:
        theory = read_mtheory(read_text(args.mtheory))
        problems.extend(f"mtheory: {v}" for v in validate_mtheory(theory))

    if grammar is not None and theory is not None and not problems:
        try:
            bridged, _ = induce_bridge(grammar, theory)
        except BridgeError as e:
            problems.append(f"bridge: {e}")
        else:
            if args.write_bridged:
                try:
                    with open(args.write_bridged, 'w', encoding='utf-8') as f:
                        f.write(serialize_mtheory(bridged))
                except OSError as e:
                    raise InputError(f"{args.write_bridged}: {e}") from e
                logger.info(f"Wrote bridged MTheory to {args.write_bridged}")

    if problems:
        for problem in problems:
            print(problem)
        return EXIT_FAILURE
    print("OK")
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser('validate', help='check a grammar and/or knowledge base')
    parser.add_argument('--grammar', metavar='PATH')
    parser.add_argument('--mtheory', metavar='PATH')
    parser.add_argument('--write-bridged', dest='write_bridged', metavar='PATH',
                        help='save the knowledge base extended with the grammar bridge')
    parser.set_defaults(func=cmd_validate)
