from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

STATE_NORM_TOL = 1e-9


def _points(v: Any) -> np.ndarray:
    x = np.array(v, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 2:
        raise ValueError("Ожидается массив точек формы (N, d), N >= 1, d >= 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("Координаты частиц должны быть конечными")
    dev = np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0))
    if dev > STATE_NORM_TOL:
        raise ValueError(f"Точки не лежат на сфере: отклонение нормы {dev:.3e}")
    x.setflags(write=False)
    return x


class ParticleState(BaseModel):
    """Конфигурация N токенов на S^{d-1} в момент времени time"""

    points: np.ndarray
    time: float = Field(0.0, ge=0)
    rescaled_time: float = Field(0.0, ge=0)
    step: int = Field(0, ge=0)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("points", mode="before")
    @classmethod
    def to_points(cls, v: Any) -> np.ndarray:
        return _points(v)

    @field_serializer("points")
    def serialize_points(self, v: np.ndarray) -> list:
        return v.tolist()

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def advanced(self, points: np.ndarray, dt: float, ds: float) -> "ParticleState":
        return ParticleState(
            points=points,
            time=self.time + dt,
            rescaled_time=self.rescaled_time + ds,
            step=self.step + 1,
        )

    def permuted(self, perm: np.ndarray) -> "ParticleState":
        return self.model_copy(update={"points": self.points[perm]})


class EmpiricalMeasure(BaseModel):
    points: np.ndarray
    weights: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("points", mode="before")
    @classmethod
    def to_points(cls, v: Any) -> np.ndarray:
        return _points(v)

    @field_validator("weights", mode="before")
    @classmethod
    def to_weights(cls, v: Any) -> np.ndarray:
        w = np.array(v, dtype=np.float64).ravel()
        if np.any(w < 0):
            raise ValueError("Веса меры должны быть неотрицательными")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"Сумма весов {w.sum():.17g} != 1")
        w.setflags(write=False)
        return w

    @model_validator(mode="after")
    def check_sizes(self) -> "EmpiricalMeasure":
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("Число точек и весов различается")
        return self

    @classmethod
    def uniform(cls, points: Any) -> "EmpiricalMeasure":
        pts = np.asarray(points, dtype=np.float64)
        n = pts.shape[0]
        return cls(points=pts, weights=np.full(n, 1.0 / n))

    @classmethod
    def from_state(cls, state: ParticleState) -> "EmpiricalMeasure":
        return cls.uniform(state.points)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


class Cluster(BaseModel):
    centroid: np.ndarray
    weight: float = Field(..., ge=0)
    member_count: int = Field(..., ge=1)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_serializer("centroid")
    def serialize_centroid(self, v: np.ndarray) -> list:
        return v.tolist()


class ClusterSet(BaseModel):
    clusters: List[Cluster]
    labels: Optional[np.ndarray] = None

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_serializer("labels")
    def serialize_labels(self, v: Optional[np.ndarray]) -> Optional[list]:
        return None if v is None else v.tolist()

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.clusters])

    @property
    def centroids(self) -> np.ndarray:
        return np.array([c.centroid for c in self.clusters])

    def major(self, min_weight: float) -> List[Cluster]:
        """Кластеры с весом не меньше min_weight"""
        return [c for c in self.clusters if c.weight >= min_weight]


class MetricPoint(BaseModel):
    step: int
    t: float
    rescaled_time: float = 0.0
    value: float
    stderr: Optional[float] = None


class Trajectory(BaseModel):
    """Снимки состояния и ряды метрик одного прогона"""

    snapshots: List[ParticleState] = []
    metrics: Dict[str, List[MetricPoint]] = {}
    final: ParticleState
    steps: int = 0
    halted: Optional[str] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def series(self, name: str) -> np.ndarray:
        return np.array([p.value for p in self.metrics.get(name, [])])

    def times(self, name: str) -> np.ndarray:
        return np.array([p.t for p in self.metrics.get(name, [])])
