from enum import Enum
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .mixture import CircleMixtureSpec
from .params import IntegratorConfig
from .scenario import InitSpec, Observable, ReportFormat, ScenarioId

Matrix = List[List[float]]


class RunConfigBase(BaseModel):
    version: Literal["v1"] = "v1"
    scenario: ScenarioId = ScenarioId.CUSTOM
    d: Optional[int] = Field(None, ge=2, le=32)
    n: Optional[int] = Field(None, ge=1)
    beta: Optional[float] = Field(None, gt=0)
    Q: Optional[Matrix] = None
    K: Optional[Matrix] = None
    V: Optional[Matrix] = None
    init: Optional[InitSpec] = None
    integrator: Optional[IntegratorConfig] = None
    observables: Optional[List[Observable]] = None
    seed: Optional[int] = None
    threads: Optional[int] = Field(None, ge=0)
    output_dir: Optional[str] = None
    format: Literal["csv"] = "csv"

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_custom(self) -> "RunConfigBase":
        if self.scenario == ScenarioId.CUSTOM:
            if self.beta is None:
                raise ValueError("Для сценария custom обязателен beta")
            if self.init is None and (self.d is None or self.n is None):
                raise ValueError("Для сценария custom нужны init или пара (d, n)")
        return self


class RunConfig(RunConfigBase):
    """Конфигурация simulate и sweep"""


class LimitFlow(str, Enum):
    ALIGNMENT = "alignment"
    PAIRING = "pairing"


class LimitConfig(RunConfigBase):
    """Конфигурация limit: предельные потоки выравнивания и парной фазы"""

    flow: LimitFlow = LimitFlow.ALIGNMENT
    T: float = Field(2.0, ge=0)
    eps: float = Field(0.1, gt=0, lt=1)


class OracleConfig(BaseModel):
    """Сетка плотностей смеси тепловых ядер на списке моментов времени"""

    version: Literal["v1"] = "v1"
    mixture: CircleMixtureSpec
    gamma: int = 1
    times: List[float]
    grid_size: int = Field(512, ge=8)
    collapse: Literal["error", "dirac"] = "error"

    model_config = ConfigDict(extra="forbid")

    @field_validator("gamma")
    @classmethod
    def check_gamma(cls, v: int) -> int:
        if v not in (1, -1):
            raise ValueError("gamma должна быть +1 или -1")
        return v

    @field_validator("times")
    @classmethod
    def check_times(cls, v: List[float]) -> List[float]:
        if not v or any(t < 0 for t in v):
            raise ValueError("times должен быть непустым списком неотрицательных чисел")
        return v


class SweepConfig(BaseModel):
    """Сетка прогонов по beta и N поверх базовой конфигурации"""

    version: Literal["v1"] = "v1"
    base: RunConfig
    betas: List[float] = Field(..., min_length=1)
    ns: List[int] = Field(..., min_length=1)

    model_config = ConfigDict(extra="forbid")

    @field_validator("betas")
    @classmethod
    def check_betas(cls, v: List[float]) -> List[float]:
        if any(b <= 0 for b in v):
            raise ValueError("Все beta должны быть положительными")
        return v

    @field_validator("ns")
    @classmethod
    def check_ns(cls, v: List[int]) -> List[int]:
        if any(n < 1 for n in v):
            raise ValueError("Все N должны быть положительными")
        return v


class VerifyConfig(BaseModel):
    """Набор проверок, переопределения их параметров и форматы отчёта"""

    version: Literal["v1"] = "v1"
    checks: List[str] = []
    overrides: Dict[str, Dict[str, Any]] = {}
    report_formats: List[ReportFormat] = [ReportFormat.JSON]
    workers: int = Field(1, ge=1)

    model_config = ConfigDict(extra="forbid")
