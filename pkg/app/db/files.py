"""
Файловое хранилище результатов: траектории, ряды метрик, отчёты проверок,
сетки оракула и данные для графиков.

Каждый файл пишется атомарно (временный файл в том же каталоге + os.replace),
так что частично записанные результаты не остаются на диске. Текстовые
файлы начинаются строкой "# {json}" с версией схемы и эхом конфигурации.
"""
import contextlib
import hashlib
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Type, TypeVar, Union

import markdown
import numpy as np
from pydantic import BaseModel, ValidationError

from ..core.config import get_settings
from ..core.exceptions import ConfigError, StorageError
from ..models.particles import MetricPoint, ParticleState
from ..models.scenario import ReportFormat, VerifyReport

logger = logging.getLogger(__name__)

TRAJECTORY_FILE = "traj.csv"
METRICS_FILE = "metrics.json"
REPORT_STEM = "report"

# Оценка длины строки CSV на одно число при 17 значащих цифрах
BYTES_PER_VALUE = 24

M = TypeVar("M", bound=BaseModel)


def atomic_write(path: Union[str, Path], data: Union[str, bytes]) -> Path:
    path = Path(path)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            with contextlib.suppress(FileNotFoundError):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise StorageError(f"Не удалось записать {path}: {exc}") from exc
    logger.debug("Записан файл %s (%d байт)", path, len(payload))
    return path


def content_hash(body: str) -> str:
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def make_header(kind: str, config: Optional[Mapping[str, Any]] = None, seed: Optional[int] = None,
                **extra: Any) -> Dict[str, Any]:
    """Заголовок файла: версия схемы, тип, зерно и эхо разрешённой конфигурации"""
    header = {"schema": get_settings().SCHEMA_VERSION, "kind": kind}
    if seed is not None:
        header["seed"] = int(seed)
    if config is not None:
        header["config"] = dict(config)
    header.update(extra)
    return header


def _header_line(header: Mapping[str, Any]) -> str:
    return "# " + json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n"


def _read_text(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"Не удалось прочитать {path}: {exc}") from exc


def _check_schema(header: Mapping[str, Any], path, kind: Optional[str] = None) -> None:
    expected = get_settings().SCHEMA_VERSION
    if header.get("schema") != expected:
        raise ConfigError(f"{path}: версия схемы {header.get('schema')!r}, ожидается {expected!r}")
    if kind is not None and header.get("kind") != kind:
        raise ConfigError(f"{path}: тип файла {header.get('kind')!r}, ожидается {kind!r}")


def _split_header(text: str, path) -> Tuple[Dict[str, Any], str]:
    first, _, rest = text.partition("\n")
    if not first.startswith("# "):
        raise ConfigError(f"{path}: отсутствует строка заголовка")
    try:
        return json.loads(first[2:]), rest
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: повреждённый заголовок: {exc}") from exc


# ---------------------------------------------------------------------------
# Конфигурации

def load_config(path: Union[str, Path], model: Type[M]) -> M:
    """Читает JSON-конфигурацию и проверяет её схемой model до начала вычислений"""
    text = _read_text(path)
    try:
        return model.model_validate(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: некорректный JSON: {exc}") from exc
    except ValidationError as exc:
        raise ConfigError(f"{path}: конфигурация не прошла проверку:\n{exc}") from exc


# ---------------------------------------------------------------------------
# Траектории

def trajectory_columns(d: int) -> List[str]:
    return ["step", "time", "rescaled_time", "particle"] + [f"c{k}" for k in range(d)]


def projected_snapshot_bytes(n: int, d: int, snapshots: int) -> int:
    return int(n) * int(snapshots) * (4 + int(d)) * BYTES_PER_VALUE


def check_snapshot_size(n: int, d: int, snapshots: int) -> bool:
    """True, если прогноз размера снимков превышает SNAPSHOT_WARN_BYTES"""
    projected = projected_snapshot_bytes(n, d, snapshots)
    limit = get_settings().SNAPSHOT_WARN_BYTES
    if projected > limit:
        logger.warning("Прогноз размера траектории %.1f МБ превышает порог %.1f МБ",
                       projected / 2**20, limit / 2**20)
        return True
    return False


def trajectory_body(snapshots: Sequence[ParticleState]) -> str:
    if not snapshots:
        return ""
    d = snapshots[0].d
    fmt = ["%d", "%.17g", "%.17g", "%d"] + ["%.17g"] * d
    buf = io.StringIO()
    for s in snapshots:
        block = np.column_stack([
            np.full(s.n, s.step),
            np.full(s.n, s.time),
            np.full(s.n, s.rescaled_time),
            np.arange(s.n),
            s.points,
        ])
        np.savetxt(buf, block, fmt=fmt, delimiter=",")
    return buf.getvalue()


def write_trajectory(path: Union[str, Path], snapshots: Sequence[ParticleState],
                     header: Mapping[str, Any]) -> str:
    """Пишет траекторию CSV и возвращает хэш содержимого строк"""
    if not snapshots:
        raise ConfigError("Траектория не содержит снимков")
    d = snapshots[0].d
    body = trajectory_body(snapshots)
    digest = content_hash(body)
    full = {**header, "columns": trajectory_columns(d), "content_hash": digest,
            "rows": sum(s.n for s in snapshots)}
    atomic_write(path, _header_line(full) + ",".join(trajectory_columns(d)) + "\n" + body)
    return digest


def read_trajectory(path: Union[str, Path]) -> Tuple[Dict[str, Any], np.ndarray]:
    """Заголовок и массив строк (step, time, rescaled_time, particle, c0..)"""
    header, rest = _split_header(_read_text(path), path)
    _check_schema(header, path, kind="trajectory")
    columns, _, body = rest.partition("\n")
    if columns.split(",") != header.get("columns"):
        raise ConfigError(f"{path}: столбцы не совпадают с заголовком")
    if header.get("content_hash") != content_hash(body):
        raise ConfigError(f"{path}: хэш содержимого не совпадает с заголовком")
    data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    return header, data


def snapshots_from_rows(data: np.ndarray) -> List[ParticleState]:
    states = []
    for step in np.unique(data[:, 0]):
        rows = data[data[:, 0] == step]
        rows = rows[np.argsort(rows[:, 3], kind="stable")]
        states.append(ParticleState(points=rows[:, 4:], time=rows[0, 1], rescaled_time=rows[0, 2], step=int(step)))
    return states


# ---------------------------------------------------------------------------
# Метрики

def metrics_payload(metrics: Mapping[str, Iterable[MetricPoint]]) -> Dict[str, List[Dict[str, float]]]:
    payload = {}
    for name, points in metrics.items():
        rows = []
        for p in points:
            row = {"t": p.t, "value": p.value}
            if p.stderr is not None:
                row["stderr"] = p.stderr
            rows.append(row)
        payload[name] = rows
    return payload


def write_metrics(path: Union[str, Path], series: Mapping[str, List[Dict[str, Any]]],
                  header: Mapping[str, Any]) -> Path:
    doc = {"header": dict(header), "series": dict(series)}
    return atomic_write(path, json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def read_metrics(path: Union[str, Path]) -> Tuple[Dict[str, Any], Dict[str, List[Dict[str, float]]]]:
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: некорректный JSON: {exc}") from exc
    if not isinstance(doc, dict) or "header" not in doc or "series" not in doc:
        raise ConfigError(f"{path}: ожидаются ключи header и series")
    _check_schema(doc["header"], path, kind="metrics")
    return doc["header"], doc["series"]


# ---------------------------------------------------------------------------
# Табличные данные

def write_columns(path: Union[str, Path], columns: Mapping[str, Sequence[float]],
                  header: Mapping[str, Any]) -> Path:
    """CSV из именованных столбцов одинаковой длины"""
    names = list(columns)
    arrays = [np.asarray(columns[name], dtype=np.float64) for name in names]
    if len({a.size for a in arrays}) > 1:
        raise ValueError("Столбцы имеют разную длину")
    buf = io.StringIO()
    if arrays and arrays[0].size:
        np.savetxt(buf, np.column_stack(arrays), fmt="%.17g", delimiter=",")
    return atomic_write(path, _header_line({**header, "columns": names}) + ",".join(names) + "\n" + buf.getvalue())


def write_oracle_grid(path: Union[str, Path], times: Sequence[float], grid: np.ndarray,
                      densities: Sequence[np.ndarray], header: Mapping[str, Any]) -> Path:
    """Плотности оракула: по одному блоку строк (t, theta, density) на каждый момент"""
    t_col = np.repeat(np.asarray(times, dtype=np.float64), grid.size)
    theta_col = np.tile(grid, len(times))
    dens = np.concatenate([np.asarray(d, dtype=np.float64) for d in densities]) if densities else np.array([])
    return write_columns(path, {"t": t_col, "theta": theta_col, "density": dens}, header)


# ---------------------------------------------------------------------------
# Отчёты проверок

def render_report_markdown(report: VerifyReport) -> str:
    status = "пройдены" if report.passed else f"провалены: {', '.join(report.failed)}"
    lines = [
        "# Отчёт проверки tokenflow",
        "",
        f"Зерно: {report.seed}, потоков: {report.threads}, "
        f"масштаб: {'настольный' if report.desk_scale else 'полный'}. Проверки {status}.",
        "",
        "| Проверка | Результат | Время, с |",
        "|---|---|---|",
    ]
    for c in report.checks:
        lines.append(f"| {c.check_id} | {'OK' if c.passed else 'FAIL'} | {c.runtime_s:.2f} |")
    for c in report.checks:
        lines += ["", f"## {c.check_id}", ""]
        if c.message:
            lines += [c.message, ""]
        for name, fit in c.fits.items():
            lines.append(f"- наклон `{name}`: {fit.slope:.4f} (r² = {fit.r2:.4f})")
        for name, value in c.values.items():
            lines.append(f"- `{name}`: {json.dumps(value, ensure_ascii=False, default=str)}")
        if c.tolerances:
            lines.append(f"- допуски: {json.dumps(c.tolerances, ensure_ascii=False)}")
    return "\n".join(lines) + "\n"


def write_report(out_dir: Union[str, Path], report: VerifyReport,
                 formats: Iterable[ReportFormat] = (ReportFormat.JSON,)) -> List[Path]:
    """Сохраняет отчёт в запрошенных форматах; JSON пишется всегда"""
    out_dir = Path(out_dir)
    formats = {ReportFormat(f) for f in formats} | {ReportFormat.JSON}
    written = []

    doc = {**report.model_dump(mode="json"), "passed": report.passed, "failed": report.failed}
    written.append(atomic_write(out_dir / f"{REPORT_STEM}.json",
                                json.dumps(doc, indent=2, ensure_ascii=False) + "\n"))
    if ReportFormat.MARKDOWN in formats or ReportFormat.HTML in formats:
        md = render_report_markdown(report)
        if ReportFormat.MARKDOWN in formats:
            written.append(atomic_write(out_dir / f"{REPORT_STEM}.md", md))
        if ReportFormat.HTML in formats:
            html = markdown.markdown(md, extensions=["tables"])
            written.append(atomic_write(out_dir / f"{REPORT_STEM}.html", html))
    return written
