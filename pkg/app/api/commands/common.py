"""Общие шаги подкоманд: конфигурация, контекст запуска, запись результатов."""
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Type, TypeVar

from pydantic import BaseModel, ValidationError

from ...core.dependencies import RunContext, get_run_context
from ...core.exceptions import ConfigError
from ...db.files import (
    METRICS_FILE,
    TRAJECTORY_FILE,
    check_snapshot_size,
    load_config,
    make_header,
    metrics_payload,
    write_metrics,
    write_trajectory,
)
from ...models.particles import Trajectory
from ...models.scenario import Scenario

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


def load_run_config(args: argparse.Namespace, model: Type[M], updates: Optional[Mapping[str, Any]] = None) -> M:
    """
    Конфигурация из --config, поверх которой применяются явные флаги.
    Без --config модель собирается только из флагов.
    """
    data: Dict[str, Any] = {}
    if getattr(args, "config", None):
        data = load_config(args.config, model).model_dump(exclude_unset=True)
    data.update({k: v for k, v in (updates or {}).items() if v is not None})
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"Некорректная конфигурация:\n{exc}") from exc


def context_from(args: argparse.Namespace, cfg: Optional[BaseModel] = None,
                 desk_scale: Optional[bool] = None) -> RunContext:
    """Флаги CLI имеют приоритет над полями конфигурации, те - над настройками"""
    def pick(flag: str, field: str):
        value = getattr(args, flag, None)
        if value is None and cfg is not None:
            value = getattr(cfg, field, None)
        return value

    return get_run_context(
        seed=pick("seed", "seed"),
        threads=pick("threads", "threads"),
        output_dir=pick("out", "output_dir"),
        desk_scale=bool(args.desk_scale) if desk_scale is None else desk_scale,
    )


def scenario_echo(scenario: Scenario) -> Dict[str, Any]:
    return scenario.model_dump(mode="json")


def write_run_outputs(out_dir: Path, traj: Trajectory, header: Mapping[str, Any]) -> Dict[str, Any]:
    """traj.csv (если есть снимки) и metrics.json; возвращает сводку прогона"""
    summary: Dict[str, Any] = {"steps": traj.steps, "halted": traj.halted, "files": []}
    if traj.snapshots:
        summary["content_hash"] = write_trajectory(out_dir / TRAJECTORY_FILE, traj.snapshots,
                                                   {**header, "kind": "trajectory"})
        summary["files"].append(str(out_dir / TRAJECTORY_FILE))
    meta = {**header, "kind": "metrics", "steps": traj.steps, "halted": traj.halted,
            "final_time": traj.final.time, "final_rescaled_time": traj.final.rescaled_time}
    write_metrics(out_dir / METRICS_FILE, metrics_payload(traj.metrics), meta)
    summary["files"].append(str(out_dir / METRICS_FILE))
    summary["final"] = {name: points[-1].value for name, points in traj.metrics.items() if points}
    return summary


def run_header(scenario: Scenario, ctx: RunContext, **extra: Any) -> Dict[str, Any]:
    return make_header("run", config=scenario_echo(scenario), seed=ctx.seed, threads=ctx.threads, **extra)


def warn_snapshot_size(scenario: Scenario, steps: int, stride: int, keep_snapshots: bool) -> bool:
    if not keep_snapshots:
        return False
    return check_snapshot_size(scenario.init.n, scenario.init.d, steps // stride + 2)


def print_summary(traj: Trajectory) -> None:
    """Строка сводки на каждый снимок"""
    names = list(traj.metrics)
    if names:
        for i, point in enumerate(traj.metrics[names[0]]):
            parts = [f"step={point.step}", f"t={point.t:.6g}", f"s={point.rescaled_time:.6g}"]
            parts += [f"{name}={traj.metrics[name][i].value:.6g}" for name in names]
            print(" ".join(parts))
    else:
        for s in traj.snapshots:
            print(f"step={s.step} t={s.time:.6g} s={s.rescaled_time:.6g}")


def print_files(files: List[str]) -> None:
    for path in files:
        print(f"записан {path}")
