import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .config import get_settings

logger = logging.getLogger(__name__)


def resolve_threads(threads: Optional[int] = None) -> int:
    """Определяет число потоков: явное значение, настройки или число ядер"""
    settings = get_settings()
    value = threads if threads is not None else settings.THREADS
    if value <= 0:
        value = os.cpu_count() or 1
    return value


def apply_threads(threads: int) -> None:
    """Фиксирует число потоков numba для детерминированного разбиения"""
    import numba

    threads = max(1, min(threads, numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(threads)
    logger.debug("numba threads = %d", threads)


@dataclass
class RunContext:
    """Контекст запуска: корневое зерно, потоки и каталог результатов"""

    seed: int
    threads: int
    output_dir: Path
    desk_scale: bool = True
    _streams: Dict[str, np.random.SeedSequence] = field(default_factory=dict, repr=False)

    def rng(self, name: str) -> np.random.Generator:
        """Независимый поток случайных чисел, однозначно определяемый именем"""
        if name not in self._streams:
            key = [int(b) for b in name.encode("utf-8")]
            self._streams[name] = np.random.SeedSequence([self.seed, *key])
        return np.random.default_rng(self._streams[name])


def get_run_context(
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    output_dir: Optional[str] = None,
    desk_scale: bool = True,
) -> RunContext:
    """Собирает контекст запуска из флагов CLI и настроек"""
    settings = get_settings()
    resolved = resolve_threads(threads)
    apply_threads(resolved)
    return RunContext(
        seed=settings.DEFAULT_SEED if seed is None else int(seed),
        threads=resolved,
        output_dir=Path(output_dir or settings.OUTPUT_DIR),
        desk_scale=desk_scale,
    )
