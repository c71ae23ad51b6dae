import argparse
import logging
import sys
from typing import List, Optional

from .commands import export_plot, limit, oracle, simulate, sweep, verify
from ..core.config import get_settings
from ..core.exceptions import TokenFlowError
from ..core.logging import setup_logging

logger = logging.getLogger(__name__)

# Подкоманды CLI
COMMANDS = [simulate, limit, oracle, verify, sweep, export_plot]


def common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("общие флаги")
    group.add_argument("--config", help="JSON-конфигурация (схема v1)")
    group.add_argument("--seed", type=int, help="корневое зерно генераторов")
    group.add_argument("--threads", type=int, help="число потоков (0 - по числу ядер)")
    group.add_argument("--out", help="каталог результатов (по умолчанию TOKENFLOW_OUTPUT_DIR)")
    group.add_argument("--desk-scale", action="store_true", help="уменьшить N и число шагов")
    group.add_argument("--log-level", help="уровень логирования (по умолчанию TOKENFLOW_LOG_LEVEL)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog=settings.PROJECT_NAME, description=settings.PROJECT_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.PROJECT_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = common_flags()
    for command in COMMANDS:
        command.add_parser(subparsers, parent)
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Разбирает аргументы, выполняет подкоманду и возвращает код завершения"""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except TokenFlowError as exc:
        logger.debug("%s", type(exc).__name__, exc_info=True)
        print(f"Ошибка: {exc.detail}", file=sys.stderr)
        return exc.exit_code
