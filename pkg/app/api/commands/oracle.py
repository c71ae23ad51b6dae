import argparse
import logging

import numpy as np

from ...compute.heat import mixture_density_circle, mixture_evolve, mixture_split_circle
from ...core.exceptions import ConfigError
from ...db.files import make_header, write_oracle_grid
from ...experiments.scenarios import scenario_defaults
from ...models.run_config import OracleConfig
from .common import context_from, load_run_config, print_files

logger = logging.getLogger(__name__)

ORACLE_FILE = "oracle.csv"


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("oracle", parents=[parent], help="Плотности смеси тепловых ядер на сетке углов")
    p.add_argument("--scenario", choices=["2a", "2b", "full_story"],
                   help="взять смесь и знак gamma из сценария")
    p.add_argument("--times", type=float, nargs="+", help="моменты времени нагрева")
    p.add_argument("--gamma", type=int, choices=[1, -1])
    p.add_argument("--grid-size", type=int)
    p.add_argument("--collapse", choices=["error", "dirac"])
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    updates = {"times": args.times, "gamma": args.gamma, "grid_size": args.grid_size, "collapse": args.collapse}
    if args.scenario:
        scenario = scenario_defaults(args.scenario)
        updates["mixture"] = scenario.init.mixture.model_dump()
        updates["gamma"] = args.gamma if args.gamma is not None else scenario.gamma
    elif not args.config:
        raise ConfigError("oracle требует --config или --scenario")
    cfg = load_run_config(args, OracleConfig, updates)
    ctx = context_from(args)

    mixture = cfg.mixture.to_heat_mixture(d=2)
    grid = 2.0 * np.pi * np.arange(cfg.grid_size) / cfg.grid_size
    densities, atoms = [], {}
    for t in cfg.times:
        evolved = mixture_evolve(mixture, t, cfg.gamma, collapse=cfg.collapse)
        if evolved.has_dirac:
            dens, at = mixture_split_circle(evolved, grid)
            atoms[str(t)] = [{"theta": a, "weight": w} for a, w in at]
        else:
            dens = mixture_density_circle(evolved, grid)
        densities.append(dens)
        logger.debug("oracle t=%g: max density %.6g", t, float(np.max(dens)))

    header = make_header("oracle", config=cfg.model_dump(mode="json"), seed=ctx.seed,
                         t_min=mixture.t_min, atoms=atoms)
    path = write_oracle_grid(ctx.output_dir / ORACLE_FILE, cfg.times, grid, densities, header)
    print_files([str(path)])
    return 0
