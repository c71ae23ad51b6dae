import argparse
import json
import logging
from typing import Any, Dict, List

from ...core.exceptions import ConfigError
from ...db.files import write_report
from ...experiments.checks import check_ids, run_all
from ...models.run_config import VerifyConfig
from ...models.scenario import ReportFormat
from .common import context_from, load_run_config, print_files

logger = logging.getLogger(__name__)

EXIT_CHECK_FAILED = 4


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("verify", parents=[parent], help="Численные проверки асимптотик")
    p.add_argument("checks", nargs="*", help=f"id проверок или all: {', '.join(check_ids())}")
    p.add_argument("--full-scale", action="store_true", help="полный масштаб вместо настольного")
    p.add_argument("--report-format", action="append", choices=[f.value for f in ReportFormat])
    p.add_argument("--set", action="append", default=[], metavar="CHECK.KNOB=VALUE",
                   help="переопределить параметр проверки; VALUE разбирается как JSON")
    p.add_argument("--workers", type=int, help="число процессов для независимых проверок")
    p.set_defaults(handler=run)


def parse_overrides(items: List[str]) -> Dict[str, Dict[str, Any]]:
    overrides: Dict[str, Dict[str, Any]] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        check_id, dot, knob = key.partition(".")
        if not sep or not dot or not knob:
            raise ConfigError(f"Ожидается CHECK.KNOB=VALUE, получено {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        overrides.setdefault(check_id, {})[knob] = value
    return overrides


def run(args: argparse.Namespace) -> int:
    checks = [] if args.checks == ["all"] else args.checks
    cfg = load_run_config(args, VerifyConfig, {
        "checks": checks or None, "report_formats": args.report_format, "workers": args.workers,
    })
    overrides = {**cfg.overrides}
    for check_id, knobs in parse_overrides(args.set).items():
        overrides[check_id] = {**overrides.get(check_id, {}), **knobs}

    ctx = context_from(args, desk_scale=not args.full_scale)
    ids = cfg.checks or check_ids()
    report = run_all(ids, ctx, overrides, workers=cfg.workers)

    for c in report.checks:
        print(f"{c.check_id:<24} {'OK' if c.passed else 'FAIL':<5} {c.runtime_s:8.2f} s")
    print_files([str(p) for p in write_report(ctx.output_dir, report, cfg.report_formats)])
    if not report.passed:
        logger.error("Проверки не пройдены: %s", ", ".join(report.failed))
        return EXIT_CHECK_FAILED
    return 0
