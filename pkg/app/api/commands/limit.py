import argparse
import logging

from ...compute.dynamics import integrate_alignment, integrate_pairing_limit
from ...experiments.observables import build_observers
from ...experiments.sampling import sample_initial
from ...experiments.scenarios import resolve_scenario
from ...models.run_config import LimitConfig, LimitFlow
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
    p = subparsers.add_parser("limit", parents=[parent],
                              help="Предельные потоки: выравнивание (beta -> 0) и парная фаза (beta -> inf)")
    p.add_argument("--flow", choices=[f.value for f in LimitFlow])
    p.add_argument("--scenario", choices=[s.value for s in ScenarioId])
    p.add_argument("--T", type=float, help="горизонт потока выравнивания")
    p.add_argument("--eps", type=float, help="порог остановки парной фазы: <y_i, y_j> > 1 - eps")
    p.add_argument("--observe", action="append", choices=[o.value for o in Observable])
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = load_run_config(args, LimitConfig, {
        "scenario": args.scenario, "flow": args.flow, "T": args.T, "eps": args.eps, "observables": args.observe,
    })
    ctx = context_from(args, cfg)
    scenario = resolve_scenario(cfg, desk_scale=ctx.desk_scale, seed=ctx.seed)
    integ = scenario.cfg
    s0 = sample_initial(scenario.init, ctx.rng("init"))
    observers = build_observers(scenario.observables, scenario.params)

    if cfg.flow == LimitFlow.ALIGNMENT:
        steps = int(round(cfg.T / integ.h))
        large = warn_snapshot_size(scenario, steps, integ.stride, integ.keep_snapshots)
        traj = integrate_alignment(s0, scenario.params, integ.h, cfg.T, observers=observers,
                                   stride=integ.stride, scheme=integ.scheme, keep_snapshots=integ.keep_snapshots)
        extra = {"flow": cfg.flow.value, "T": cfg.T}
    else:
        large = warn_snapshot_size(scenario, integ.max_steps, integ.stride, integ.keep_snapshots)
        traj = integrate_pairing_limit(s0, integ.h, cfg.eps, integ.max_steps, observers=observers,
                                       stride=integ.stride, keep_snapshots=integ.keep_snapshots)
        if traj.halted is None:
            logger.warning("Порог 1 - eps не достигнут за %d шагов", integ.max_steps)
        t_eps = traj.final.rescaled_time if traj.halted else None
        extra = {"flow": cfg.flow.value, "eps": cfg.eps, "T_eps": t_eps}
        print(f"T_eps = {t_eps}")

    summary = write_run_outputs(ctx.output_dir, traj, run_header(scenario, ctx, snapshot_size_warning=large, **extra))
    print_summary(traj)
    print_files(summary["files"])
    return 0
