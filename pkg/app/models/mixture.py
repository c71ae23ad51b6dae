from typing import Any, List, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from .sphere import as_unit_vector


class HeatComponent(BaseModel):
    """
    Компонента смеси тепловых ядер: центр, вес и время нагрева.

    Текущая дисперсия равна base_var + elapsed смеси; dirac=True помечает
    схлопнувшуюся компоненту (плотность не определена).
    """

    center: np.ndarray
    base_var: float
    weight: float = Field(..., ge=0)
    dirac: bool = False

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("center", mode="before")
    @classmethod
    def to_center(cls, v: Any) -> np.ndarray:
        c = as_unit_vector(v)
        c.setflags(write=False)
        return c

    @field_serializer("center")
    def serialize_center(self, v: np.ndarray) -> list:
        return v.tolist()


class HeatMixture(BaseModel):
    components: List[HeatComponent]
    elapsed: float = 0.0

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def check_mixture(self) -> "HeatMixture":
        if not self.components:
            raise ValueError("Смесь должна содержать хотя бы одну компоненту")
        dims = {c.center.shape[0] for c in self.components}
        if len(dims) != 1:
            raise ValueError("Центры компонент имеют разные размерности")
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"Сумма весов смеси {total:.17g} != 1")
        for j, c in enumerate(self.components):
            if not c.dirac and c.base_var + self.elapsed <= 0:
                raise ValueError(f"Компонента {j + 1} имеет неположительную дисперсию")
        return self

    @classmethod
    def build(
        cls,
        centers: Any,
        variances: Any,
        weights: Any,
    ) -> "HeatMixture":
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        variances = np.broadcast_to(np.asarray(variances, dtype=np.float64), (centers.shape[0],))
        weights = np.asarray(weights, dtype=np.float64)
        comps = [
            HeatComponent(center=c, base_var=float(v), weight=float(w), dirac=bool(v == 0))
            for c, v, w in zip(centers, variances, weights)
        ]
        return cls(components=comps)

    @property
    def d(self) -> int:
        return self.components[0].center.shape[0]

    @property
    def variances(self) -> np.ndarray:
        return np.array([0.0 if c.dirac else c.base_var + self.elapsed for c in self.components])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.components])

    @property
    def has_dirac(self) -> bool:
        return any(c.dirac for c in self.components)

    @property
    def t_min(self) -> float:
        """Время первого схлопывания при обратной эволюции"""
        live = [c.base_var + self.elapsed for c in self.components if not c.dirac]
        return min(live) if live else 0.0


class CircleMixtureSpec(BaseModel):
    """
    Смесь обёрнутых нормальных законов на S^1.

    heat_var - время нагрева компоненты; угловое стандартное отклонение
    обёрнутого нормального закона равно sqrt(2 * heat_var).
    """

    weights: List[float]
    means: List[float]
    heat_var: Union[float, List[float]]

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_spec(self) -> "CircleMixtureSpec":
        if len(self.weights) != len(self.means) or not self.weights:
            raise ValueError("Число весов и средних должно совпадать")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("Веса смеси должны быть неотрицательны и давать в сумме 1")
        if np.any(self.variances < 0):
            raise ValueError("Время нагрева не может быть отрицательным")
        return self

    @property
    def variances(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.heat_var, dtype=np.float64), (len(self.weights),)).copy()

    @property
    def stds(self) -> np.ndarray:
        return np.sqrt(2.0 * self.variances)

    def to_heat_mixture(self, d: int = 2) -> HeatMixture:
        """Смесь тепловых ядер на экваторе S^{d-1} (плоскость первых двух осей)"""
        means = np.asarray(self.means, dtype=np.float64)
        centers = np.zeros((len(means), d))
        centers[:, 0] = np.cos(means)
        centers[:, 1] = np.sin(means)
        return HeatMixture.build(centers, self.variances, self.weights)

