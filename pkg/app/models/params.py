from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from .sphere import as_unit_vector


def _square(v: Any) -> np.ndarray:
    a = np.array(v, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError("Ожидается квадратная матрица")
    if not np.all(np.isfinite(a)):
        raise ValueError("Элементы матрицы должны быть конечными")
    a.setflags(write=False)
    return a


class ModelParams(BaseModel):
    """Матрицы Q, K, V и обратная температура beta"""

    Q: np.ndarray
    K: np.ndarray
    V: np.ndarray
    beta: float = Field(..., gt=0)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("Q", "K", "V", mode="before")
    @classmethod
    def to_matrix(cls, v: Any) -> np.ndarray:
        return _square(v)

    @model_validator(mode="after")
    def check_shapes(self) -> "ModelParams":
        if not (self.Q.shape == self.K.shape == self.V.shape):
            raise ValueError("Q, K, V должны иметь одинаковую размерность")
        return self

    @field_serializer("Q", "K", "V")
    def serialize_matrix(self, v: np.ndarray) -> list:
        return v.tolist()

    @classmethod
    def identity(cls, d: int, beta: float, v_sign: float = 1.0) -> "ModelParams":
        eye = np.eye(d)
        return cls(Q=eye, K=eye, V=v_sign * eye, beta=beta)

    @property
    def d(self) -> int:
        return self.Q.shape[0]

    @property
    def key_query(self) -> np.ndarray:
        """K^T Q: x' = K^T Q x"""
        return self.K.T @ self.Q

    @property
    def interaction_matrix(self) -> np.ndarray:
        """V K^T Q, чьё доминирующее подпространство есть E_max"""
        return self.V @ self.K.T @ self.Q

    @property
    def is_gradient_flow(self) -> bool:
        b = self.Q.T @ self.K
        return bool(np.allclose(b, b.T, atol=1e-12))

    def with_beta(self, beta: float) -> "ModelParams":
        return self.model_copy(update={"beta": float(beta)})


class Scheme(str, Enum):
    PROJECTED_EULER = "projected-euler"
    PROJECTED_RK4 = "projected-rk4"
    DISCRETE_LAYER = "discrete-layer"


class Clock(str, Enum):
    PLAIN = "plain"
    HEAT = "heat"
    PAIRING = "pairing"


class IntegratorConfig(BaseModel):
    scheme: Scheme = Scheme.PROJECTED_EULER
    h: float = Field(1e-2, gt=0)
    clock: Clock = Clock.PLAIN
    max_steps: int = Field(100, ge=1)
    stride: int = Field(10, ge=1)
    keep_snapshots: bool = True
    # Остановка парной фазы при <x_i, x_j> > 1 - pair_eps
    pair_eps: Optional[float] = Field(None, gt=0, lt=1)

    model_config = ConfigDict(extra="forbid", use_enum_values=False)


class Subspace(BaseModel):
    """Ортонормированный базис подпространства (строки basis)"""

    basis: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("basis", mode="before")
    @classmethod
    def to_basis(cls, v: Any) -> np.ndarray:
        b = np.atleast_2d(np.array(v, dtype=np.float64))
        k, d = b.shape
        if not 1 <= k <= d:
            raise ValueError("Размерность подпространства должна быть в [1, d]")
        if not np.allclose(b @ b.T, np.eye(k), atol=1e-10):
            raise ValueError("Базис подпространства не ортонормирован")
        b.setflags(write=False)
        return b

    @field_serializer("basis")
    def serialize_basis(self, v: np.ndarray) -> list:
        return v.tolist()

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis


class VmfParams(BaseModel):
    mean_dir: np.ndarray
    kappa: float = Field(..., ge=0)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("mean_dir", mode="before")
    @classmethod
    def to_unit(cls, v: Any) -> np.ndarray:
        return as_unit_vector(v)

    @property
    def d(self) -> int:
        return self.mean_dir.shape[0]
