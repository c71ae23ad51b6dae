import argparse
import json
import logging
from typing import Any, Dict

from pydantic import ValidationError
from slugify import slugify

from ...core.exceptions import ConfigError
from ...db.files import atomic_write, make_header
from ...models.run_config import RunConfig, SweepConfig
from .common import context_from, load_run_config, print_files
from .simulate import simulate_to

logger = logging.getLogger(__name__)

SWEEP_FILE = "sweep.json"


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("sweep", parents=[parent], help="Сетка прогонов по beta и N")
    p.add_argument("--no-snapshots", action="store_true")
    p.set_defaults(handler=run)


def cell_name(beta: float, n: int) -> str:
    return slugify(f"beta {beta:g} n {n}")


def cell_config(base: RunConfig, beta: float, n: int) -> RunConfig:
    data: Dict[str, Any] = base.model_dump(exclude_unset=True)
    data["beta"] = beta
    if data.get("init"):
        data["init"] = {**data["init"], "n": n}
    else:
        data["n"] = n
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"Ячейка beta={beta:g}, N={n}: некорректная конфигурация:\n{exc}") from exc


def run(args: argparse.Namespace) -> int:
    if not args.config:
        raise ConfigError("sweep требует --config")
    cfg = load_run_config(args, SweepConfig)
    ctx = context_from(args, cfg.base)

    cells = []
    for beta in cfg.betas:
        for n in cfg.ns:
            name = cell_name(beta, n)
            logger.info("Ячейка %s", name)
            summary = simulate_to(cell_config(cfg.base, beta, n), ctx, ctx.output_dir / name,
                                  keep_snapshots=not args.no_snapshots, echo=False)
            cells.append({"beta": beta, "n": n, "dir": name, **summary})
            print(f"{name}: шагов {summary['steps']}, {summary['final']}")

    doc = {"header": make_header("sweep", config=cfg.model_dump(mode="json"), seed=ctx.seed,
                                 threads=ctx.threads), "cells": cells}
    path = atomic_write(ctx.output_dir / SWEEP_FILE, json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    print_files([str(path)])
    return 0
