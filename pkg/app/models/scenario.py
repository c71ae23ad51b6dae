from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from .mixture import CircleMixtureSpec
from .params import IntegratorConfig, ModelParams


class ScenarioId(str, Enum):
    ALIGN_COLLAPSE = "1a"
    ALIGN_ROTATION = "1b"
    HEAT_BACKWARD = "2a"
    HEAT_FORWARD = "2b"
    FULL_STORY = "full_story"
    CUSTOM = "custom"


class InitKind(str, Enum):
    UNIFORM = "uniform"
    CIRCLE_MIXTURE = "circle_mixture"
    POINTS = "points"


class Elevation(str, Enum):
    # Угол возвышения psi для точек смеси при d = 3
    NONE = "none"
    UNIFORM = "uniform"


class Observable(str, Enum):
    SUBSPACE_DISTANCE = "subspace_distance"
    ENERGY = "energy"
    LOG_ENERGY = "log_energy"
    NORM_DEVIATION = "norm_deviation"
    CLUSTER_COUNT = "cluster_count"
    PAIR_INNER = "pair_inner"


class InitSpec(BaseModel):
    """Описание начального распределения частиц"""

    kind: InitKind = InitKind.UNIFORM
    n: int = Field(1000, ge=1)
    d: int = Field(3, ge=2)
    mixture: Optional[CircleMixtureSpec] = None
    elevation: Elevation = Elevation.NONE
    points: Optional[List[List[float]]] = None

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_init(self) -> "InitSpec":
        if self.kind == InitKind.CIRCLE_MIXTURE and self.mixture is None:
            raise ValueError("Для circle_mixture нужна смесь mixture")
        if self.kind == InitKind.POINTS:
            if not self.points:
                raise ValueError("Для points нужен список точек")
            if len(self.points) != self.n or any(len(p) != self.d for p in self.points):
                raise ValueError("Форма points не совпадает с (n, d)")
        if self.elevation == Elevation.UNIFORM and self.d != 3:
            raise ValueError("Равномерное возвышение определено только при d = 3")
        return self


class Scenario(BaseModel):
    """Полностью разрешённый сценарий: параметры, начальное условие, интегратор"""

    id: ScenarioId
    params: ModelParams
    init: InitSpec
    cfg: IntegratorConfig
    observables: List[Observable] = []
    seed: int = 0
    # Знак теплового предела (+1 обратная, -1 прямая), если применимо
    gamma: Optional[int] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_dims(self) -> "Scenario":
        if self.params.d != self.init.d:
            raise ValueError(f"Размерность матриц {self.params.d} не совпадает с d={self.init.d}")
        return self


class RateFit(BaseModel):
    """Прямая наименьших квадратов в координатах (log x, log y)"""

    xs: List[float]
    ys: List[float]
    slope: float
    intercept: float
    r2: float

    @field_validator("xs")
    @classmethod
    def check_xs(cls, v: List[float]) -> List[float]:
        if len(v) < 3:
            raise ValueError("Нужно не меньше трёх точек")
        if np.any(np.diff(v) <= 0):
            raise ValueError("xs должны строго возрастать")
        return v


class CheckReport(BaseModel):
    check_id: str
    passed: bool
    message: str = ""
    values: Dict[str, Any] = {}
    tolerances: Dict[str, Any] = {}
    series: Dict[str, List[Dict[str, float]]] = {}
    fits: Dict[str, RateFit] = {}
    runtime_s: float = 0.0

    @field_serializer("runtime_s")
    def serialize_runtime(self, v: float) -> float:
        return round(v, 3)


class VerifyReport(BaseModel):
    version: str = "v1"
    seed: int
    threads: int
    desk_scale: bool = True
    checks: List[CheckReport] = []

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[str]:
        return [c.check_id for c in self.checks if not c.passed]


class ReportFormat(str, Enum):
    JSON = "json"
    MARKDOWN = "markdown"
    HTML = "html"


class PlotKind(str, Enum):
    # density: KDE против кривой оракула; energy: (log10 t, энергия); series: ряды метрик
    DENSITY = "density"
    ENERGY = "energy"
    SERIES = "series"
