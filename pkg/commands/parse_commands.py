"""
Parse command group: `parse` (plain PCFG) and `sparse` (knowledge-base guided)
"""
import logging

from services.app_config import Config
from services.bridge import induce_bridge
from services.chart_parser import enumerate_parses, viterbi_parse
from services.errors import NoParseError
from services.ssparser import parse_with_semantics

from commands.common import (add_output_arguments, load_grammar_file, load_mtheory_file,
                             render_result, run_sentences, sentence_tokens)

logger = logging.getLogger(__name__)


def cmd_parse(args) -> int:
    fmt = Config.output_format(args.format)
    grammar = load_grammar_file(args.grammar)

    def handle(sentence):
        tokens = sentence_tokens(sentence)
        if args.all:
            parses = enumerate_parses(grammar, tokens)
            if not parses:
                raise NoParseError(f"no parse: start symbol {grammar.start} does not span the sentence")
            return '\n'.join(render_result(tree, p, fmt) for tree, p in parses)
        tree, probability = viterbi_parse(grammar, tokens)
        return render_result(tree, probability, fmt)

    return run_sentences(args, handle)


def cmd_sparse(args) -> int:
    fmt = Config.output_format(args.format)
    mode = Config.mode(args.mode)
    depth_limit = Config.depth_limit(args.depth_limit)
    symmetric = Config.symmetric_query(args.symmetric)
    grammar = load_grammar_file(args.grammar)
    theory = load_mtheory_file(args.mtheory)
    _, binding = induce_bridge(grammar, theory)

    def handle(sentence):
        tokens = sentence_tokens(sentence)
        tree, probability, trace = parse_with_semantics(
            grammar, binding, tokens, mode=mode, depth_limit=depth_limit, symmetric=symmetric)
        return render_result(tree, probability, fmt, trace.to_list() if args.trace else None)

    return run_sentences(args, handle)


def register(subparsers) -> None:
    parse_parser = subparsers.add_parser('parse', help='Viterbi parse with the PCFG alone')
    parse_parser.add_argument('--grammar', required=True, metavar='PATH')
    parse_parser.add_argument('--all', action='store_true',
                              help='print every parse, most probable first')
    add_output_arguments(parse_parser)
    parse_parser.set_defaults(func=cmd_parse)

    sparse_parser = subparsers.add_parser('sparse', help='parse resolving ambiguity with a knowledge base')
    sparse_parser.add_argument('--grammar', required=True, metavar='PATH')
    sparse_parser.add_argument('--mtheory', required=True, metavar='PATH')
    sparse_parser.add_argument('--mode', choices=['literal', 'normalized'], default=None)
    sparse_parser.add_argument('--symmetric', action='store_true',
                               help='also query the stronger candidate')
    sparse_parser.add_argument('--depth-limit', dest='depth_limit', metavar='N', default=None)
    add_output_arguments(sparse_parser, with_trace=True)
    sparse_parser.set_defaults(func=cmd_sparse)
