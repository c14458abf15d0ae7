import argparse
import logging
import sys

from services.app_config import Config
from services.errors import SsparseError
from utils.logging_setup import configure_logging

from commands import parse_commands, query_commands, validate_commands
from commands.common import report_error

logger = logging.getLogger(__name__)


def create_app():
    parser = argparse.ArgumentParser(
        prog='ssparse',
        description='PCFG parsing with knowledge-base guided attachment disambiguation')
    parser.add_argument('--log-level', dest='log_level', default=None,
                        help='DEBUG, INFO, WARNING or ERROR (default: $SSPARSE_LOG_LEVEL or WARNING)')
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True

    # register all command groups
    validate_commands.register(subparsers)
    parse_commands.register(subparsers)
    query_commands.register(subparsers)
    return parser


def main(argv=None) -> int:
    parser = create_app()
    args = parser.parse_args(argv)
    configure_logging(Config.log_level(args.log_level))
    try:
        return args.func(args)
    except SsparseError as e:
        logger.debug(f"{args.command} failed: {type(e).__name__}")
        return report_error(e)


if __name__ == '__main__':
    sys.exit(main())
