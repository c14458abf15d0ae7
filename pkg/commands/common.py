"""
Shared command helpers: file loading, output rendering and the exit-code contract
"""
import json
import logging
import sys
from typing import Iterable, List, Optional

from services.app_config import Config
from services.errors import InputError, ParseError, SsparseError
from services.grammar import Pcfg, load_grammar
from services.mebn import MTheory
from services.mtheory_loader import load_mtheory
from services.parse_tree import ParseTree, render_tree, to_dict
from utils.input_validator import tokenize, validate_file_path, validate_sentence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_ERROR = 2

# CLI format name -> renderer format name
TREE_FORMATS = {'tree': 'ascii', 'bracket': 'bracketed', 'json': 'json'}


def exit_code_for(error: Exception) -> int:
    """Parse/decision failures are 1; input, configuration and knowledge-base errors are 2"""
    if isinstance(error, ParseError):
        return EXIT_FAILURE
    return EXIT_ERROR


def report_error(error: Exception, out=None, context: str = None) -> int:
    out = out or sys.stderr
    where = f"{context}: " if context else ''
    print(f"error: {where}{error}", file=out)
    return exit_code_for(error)


def read_text(path: str) -> str:
    is_valid, message = validate_file_path(path)
    if not is_valid:
        raise InputError(message)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return f.read()
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"{path}: {e}") from e


def load_grammar_file(path: str) -> Pcfg:
    return load_grammar(read_text(path))


def load_mtheory_file(path: str) -> MTheory:
    return load_mtheory(read_text(path))


def sentence_tokens(sentence: str) -> List[str]:
    is_valid, message = validate_sentence(sentence)
    if not is_valid:
        raise ParseError(message)
    return tokenize(sentence)


def batch_sentences(path: str) -> Iterable[str]:
    """Non-blank lines of a batch file, `#` comment lines skipped"""
    for line in read_text(path).splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith('#'):
            yield stripped


def format_probability(p: float) -> str:
    """Scientific notation with the configured number of significant digits"""
    return f"{p:.{Config.significant_digits() - 1}e}"


def render_result(tree: ParseTree, probability: float, fmt: str,
                  trace: Optional[list] = None) -> str:
    """Text printed for one parse: the tree, its probability, and optionally the decision trace"""
    if fmt == 'json':
        data = {'tree': to_dict(tree), 'probability': probability}
        if trace is not None:
            data['trace'] = trace
        return json.dumps(data)
    lines = [render_tree(tree, TREE_FORMATS[fmt]), f"probability: {format_probability(probability)}"]
    if trace is not None:
        lines.append(f"trace: {json.dumps(trace)}")
    return '\n'.join(lines)


def run_sentences(args, handle_one) -> int:
    """
    Run `handle_one(sentence) -> text` for the positional sentence or each batch
    line. Failures on one line are reported and do not stop the batch; the exit
    code is the largest per-line code.
    """
    if args.batch:
        sentences = list(batch_sentences(args.batch))
    elif args.sentence:
        sentences = [' '.join(args.sentence)]
    else:
        raise InputError("a sentence or --batch PATH is required")

    worst = EXIT_OK
    for sentence in sentences:
        try:
            print(handle_one(sentence))
        except SsparseError as e:
            logger.debug(f"batch line failed: {sentence!r}")
            worst = max(worst, report_error(e, context=repr(sentence)))
    return worst


def add_output_arguments(parser, with_trace: bool = False) -> None:
    parser.add_argument('--format', choices=sorted(TREE_FORMATS), default=None,
                        help='tree: indented; bracket: Penn brackets; json: one object per parse')
    parser.add_argument('--batch', metavar='PATH', help='parse every line of PATH')
    parser.add_argument('sentence', nargs='*', help='whitespace-tokenized sentence')
    if with_trace:
        parser.add_argument('--trace', action='store_true', help='append the decision trace')

