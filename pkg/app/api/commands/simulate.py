import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from ...compute.dynamics import integrate
from ...core.exceptions import ConfigError
from ...core.dependencies import RunContext
from ...experiments.observables import build_observers
from ...experiments.sampling import sample_initial
from ...experiments.scenarios import resolve_scenario
from ...models.params import IntegratorConfig
from ...models.run_config import RunConfig
from ...models.scenario import Observable, ScenarioId
from .common import (
    context_from,
    load_run_config,
    print_files,
    print_summary,
    run_header,
    warn_snapshot_size,
    write_run_outputs,
)

logger = logging.getLogger(__name__)


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("simulate", parents=[parent], help="Прогон динамики частиц")
    p.add_argument("--scenario", choices=[s.value for s in ScenarioId])
    p.add_argument("--observe", action="append", choices=[o.value for o in Observable],
                   help="метрика для записи в metrics.json (можно повторять)")
    p.add_argument("--steps", type=int, help="число шагов интегратора")
    p.add_argument("--stride", type=int, help="шаг между снимками")
    p.add_argument("--no-snapshots", action="store_true", help="не сохранять траекторию")
    p.set_defaults(handler=run)


def simulate_to(cfg: RunConfig, ctx: RunContext, out_dir: Path, keep_snapshots: bool = True,
                integrator_updates: Optional[Dict[str, Any]] = None, echo: bool = True) -> Dict[str, Any]:
    """Разрешает сценарий, интегрирует и пишет результаты в out_dir"""
    scenario = resolve_scenario(cfg, desk_scale=ctx.desk_scale, seed=ctx.seed)
    updates = {k: v for k, v in (integrator_updates or {}).items() if v is not None}
    updates["keep_snapshots"] = keep_snapshots and scenario.cfg.keep_snapshots
    try:
        integ = IntegratorConfig.model_validate({**scenario.cfg.model_dump(), **updates})
    except ValidationError as exc:
        raise ConfigError(f"Некорректные параметры интегратора:\n{exc}") from exc
    scenario = scenario.model_copy(update={"cfg": integ})

    large = warn_snapshot_size(scenario, integ.max_steps, integ.stride, integ.keep_snapshots)
    s0 = sample_initial(scenario.init, ctx.rng("init"))
    traj = integrate(s0, scenario.params, integ, observers=build_observers(scenario.observables, scenario.params))

    header = run_header(scenario, ctx, snapshot_size_warning=large)
    summary = write_run_outputs(Path(out_dir), traj, header)
    if echo:
        print_summary(traj)
        print_files(summary["files"])
    return summary


def run(args: argparse.Namespace) -> int:
    cfg = load_run_config(args, RunConfig, {"scenario": args.scenario, "observables": args.observe})
    ctx = context_from(args, cfg)
    simulate_to(cfg, ctx, ctx.output_dir, keep_snapshots=not args.no_snapshots,
                integrator_updates={"max_steps": args.steps, "stride": args.stride})
    return 0
