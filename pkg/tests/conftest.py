import numpy as np
import pytest

from app.core.config import get_settings
from app.core.dependencies import RunContext


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Настройки читаются заново в каждом тесте, результаты пишутся во временный каталог"""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("TOKENFLOW_OUTPUT_DIR", str(tmp_path / "runs"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def run_ctx(tmp_path):
    return RunContext(seed=7, threads=1, output_dir=tmp_path / "out", desk_scale=True)
