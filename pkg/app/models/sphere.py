from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_serializer, field_validator, model_validator

UNIT_TOL = 1e-12
TANGENT_TOL = 1e-10


def as_unit_vector(coords: Any, tol: float = 1e-9) -> np.ndarray:
    """Проверяет и возвращает точку единичной сферы S^{d-1} как массив float64"""
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("Точка сферы должна быть вектором размерности d >= 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("Координаты должны быть конечными")
    if abs(np.linalg.norm(x) - 1.0) > tol:
        raise ValueError(f"Вектор не единичный: |x| = {np.linalg.norm(x):.17g}")
    return x


class TangentVector(BaseModel):
    """Касательный вектор vec в точке base"""

    base: np.ndarray
    vec: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("base", "vec", mode="before")
    @classmethod
    def to_array(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.float64)

    @model_validator(mode="after")
    def check_tangency(self) -> "TangentVector":
        if self.base.shape != self.vec.shape:
            raise ValueError("Размерности base и vec не совпадают")
        scale = max(1.0, float(np.linalg.norm(self.vec)))
        if abs(float(self.base @ self.vec)) > TANGENT_TOL * scale:
            raise ValueError("Вектор не лежит в касательном пространстве")
        return self

    @field_serializer("base", "vec")
    def serialize_array(self, v: np.ndarray) -> list:
        return v.tolist()

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))
