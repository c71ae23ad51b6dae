"""
Данные для графиков: гистограмма и KDE азимутов против кривой оракула,
энергия на логарифмической оси времени, ряды метрик. Картинки не рисуются.
"""
import argparse
import logging
from pathlib import Path
from typing import Dict, List

import numpy as np
from slugify import slugify

from ...compute.heat import mixture_density_circle, mixture_evolve
from ...compute.metrics import kde_circle
from ...compute.sphere import angles_of
from ...core.exceptions import ConfigError, HeatCollapseError
from ...db.files import (
    METRICS_FILE,
    TRAJECTORY_FILE,
    make_header,
    read_metrics,
    read_trajectory,
    snapshots_from_rows,
    write_columns,
)
from ...models.mixture import CircleMixtureSpec
from ...models.scenario import PlotKind
from .common import print_files

logger = logging.getLogger(__name__)


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("export-plot", parents=[parent], help="CSV для построения графиков")
    p.add_argument("--kind", required=True, choices=[k.value for k in PlotKind])
    p.add_argument("--traj", help=f"файл траектории (по умолчанию {TRAJECTORY_FILE} в --out)")
    p.add_argument("--metrics", help=f"файл метрик (по умолчанию {METRICS_FILE} в --out)")
    p.add_argument("--bandwidth", type=float, default=0.1, help="ширина ядра KDE, рад")
    p.add_argument("--grid-size", type=int, default=256)
    p.set_defaults(handler=run)


def _oracle_curve(config: Dict, s: float, grid: np.ndarray) -> np.ndarray:
    """Плотность оракула в перемасштабированный момент s или NaN, если оракула нет"""
    init = config.get("init") or {}
    gamma = config.get("gamma")
    clock = (config.get("cfg") or {}).get("clock")
    if init.get("mixture") is None or gamma is None or clock != "heat":
        return np.full(grid.size, np.nan)
    mixture = CircleMixtureSpec.model_validate(init["mixture"]).to_heat_mixture(d=2)
    try:
        return mixture_density_circle(mixture_evolve(mixture, s, gamma), grid)
    except HeatCollapseError as exc:
        logger.warning("Оракул не определён при s=%g: %s", s, exc.detail)
        return np.full(grid.size, np.nan)


def export_density(traj_path: Path, out_dir: Path, bandwidth: float, grid_size: int) -> List[Path]:
    header, data = read_trajectory(traj_path)
    config = header.get("config") or {}
    grid = 2.0 * np.pi * np.arange(grid_size) / grid_size
    width = 2.0 * np.pi / grid_size

    cols: Dict[str, list] = {"step": [], "t": [], "s": [], "theta": [], "histogram": [], "kde": [], "oracle": []}
    for state in snapshots_from_rows(data):
        angles = angles_of(state.points)
        # Ячейки гистограммы центрированы в узлах сетки KDE
        shifted = np.mod(angles + 0.5 * width, 2.0 * np.pi) - 0.5 * width
        hist, _ = np.histogram(shifted, bins=grid_size, range=(-0.5 * width, 2.0 * np.pi - 0.5 * width),
                               density=True)
        _, kde = kde_circle(angles, bandwidth, grid_size=grid_size)
        cols["step"].append(np.full(grid_size, state.step))
        cols["t"].append(np.full(grid_size, state.time))
        cols["s"].append(np.full(grid_size, state.rescaled_time))
        cols["theta"].append(grid)
        cols["histogram"].append(hist)
        cols["kde"].append(kde)
        cols["oracle"].append(_oracle_curve(config, state.rescaled_time, grid))

    meta = make_header("plot-density", config=config, seed=header.get("seed"), bandwidth=bandwidth,
                       source=traj_path.name)
    return [write_columns(out_dir / "density.csv", {k: np.concatenate(v) for k, v in cols.items()}, meta)]


def export_energy(metrics_path: Path, out_dir: Path) -> List[Path]:
    header, series = read_metrics(metrics_path)
    if "energy" not in series:
        raise ConfigError(f"{metrics_path}: нет ряда energy (добавьте наблюдаемую energy)")
    rows = [r for r in series["energy"] if r["t"] > 0]
    meta = make_header("plot-energy", config=header.get("config"), seed=header.get("seed"),
                       source=metrics_path.name)
    cols = {"log10_t": np.log10([r["t"] for r in rows]), "energy": [r["value"] for r in rows]}
    return [write_columns(out_dir / "energy.csv", cols, meta)]


def export_series(metrics_path: Path, out_dir: Path) -> List[Path]:
    header, series = read_metrics(metrics_path)
    written = []
    for name, rows in series.items():
        cols = {"t": [r["t"] for r in rows], "value": [r["value"] for r in rows]}
        if rows and all("stderr" in r for r in rows):
            cols["stderr"] = [r["stderr"] for r in rows]
        meta = make_header("plot-series", config=header.get("config"), seed=header.get("seed"),
                           series=name, source=metrics_path.name)
        written.append(write_columns(out_dir / f"series-{slugify(name)}.csv", cols, meta))
    return written


def run(args: argparse.Namespace) -> int:
    kind = PlotKind(args.kind)
    base = Path(args.out) if args.out else None
    if kind == PlotKind.DENSITY:
        source = Path(args.traj) if args.traj else (base or Path(".")) / TRAJECTORY_FILE
        if args.bandwidth <= 0 or args.grid_size < 8:
            raise ConfigError("Ожидается bandwidth > 0 и grid-size >= 8")
        written = export_density(source, base or source.parent, args.bandwidth, args.grid_size)
    else:
        source = Path(args.metrics) if args.metrics else (base or Path(".")) / METRICS_FILE
        exporter = export_energy if kind == PlotKind.ENERGY else export_series
        written = exporter(source, base or source.parent)
    print_files([str(p) for p in written])
    return 0
