from typing import Optional
from functools import lru_cache
import logging

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    PROJECT_NAME: str = "tokenflow"
    PROJECT_VERSION: str = "1.0.0"
    PROJECT_DESCRIPTION: str = "Симулятор динамики токенов трансформера на единичной сфере"
    SCHEMA_VERSION: str = "v1"

    # Каталог результатов по умолчанию (TOKENFLOW_OUTPUT_DIR)
    OUTPUT_DIR: str = "runs"
    LOG_LEVEL: str = "INFO"

    # Параллелизм: 0 - по числу ядер
    THREADS: int = 0
    DEFAULT_SEED: int = 0

    # Снимки траекторий
    SNAPSHOT_STRIDE: int = 10
    SNAPSHOT_WARN_BYTES: int = 100 * 1024 * 1024

    # Численные константы
    HEAT_KERNEL_CROSSOVER: float = 0.5
    PAIRING_CLOCK_CAP: float = 700.0
    CLUSTER_ANGULAR_TOL: float = 0.05
    SLICED_N_PROJ: int = 128
    W1_GRID_BINS: int = 4096

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="TOKENFLOW_",
        case_sensitive=True,
        extra="ignore",
    )

    # Валидаторы
    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def validate_log_level(cls, v: Optional[str]) -> str:
        if not v or logging.getLevelName(str(v).upper()) == f"Level {str(v).upper()}":
            raise ValueError(f"Неизвестный уровень логирования: {v}")
        return str(v).upper()

    @field_validator("HEAT_KERNEL_CROSSOVER", "PAIRING_CLOCK_CAP", "CLUSTER_ANGULAR_TOL")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Численная константа должна быть положительной")
        return v

    @field_validator("THREADS")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        if v < 0:
            raise ValueError("THREADS не может быть отрицательным")
        return v

    @field_validator("SNAPSHOT_STRIDE", "SLICED_N_PROJ", "W1_GRID_BINS")
    @classmethod
    def validate_counts(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Значение должно быть не меньше 1")
        return v


@lru_cache()
def get_settings() -> Settings:
    """
    Возвращает объект настроек приложения с кешированием
    """
    return Settings()
