"""Примитивы единичной сферы S^{d-1}: проекция, шаги с нормализацией, выборка."""
import numpy as np

from ..core.exceptions import DegenerateStepError
from ..models.sphere import TangentVector, as_unit_vector

DEGENERATE_NORM = 1e-14


def project_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """P_x y = y - <x, y> x построчно для массивов формы (..., d)"""
    return y - np.sum(x * y, axis=-1, keepdims=True) * x


def project_tangent(x, y) -> TangentVector:
    """Ортогональная проекция y на касательное пространство в точке x"""
    x = as_unit_vector(x)
    y = np.asarray(y, dtype=np.float64)
    return TangentVector(base=x, vec=project_rows(x, y))


def normalize_rows(z: np.ndarray, step: int = None) -> np.ndarray:
    """Оператор нормализации N: R^d -> S^{d-1}; почти нулевой вектор - ошибка"""
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    bad = np.flatnonzero(norms.ravel() < DEGENERATE_NORM)
    if bad.size:
        raise DegenerateStepError(
            "Вырожденный вектор перед нормализацией: шаг слишком велик",
            step=step,
            particle=int(bad[0]),
        )
    return z / norms


def renormalized_step(x, v, h: float) -> np.ndarray:
    """(x + h v) / |x + h v|"""
    if h <= 0:
        raise ValueError("Шаг h должен быть положительным")
    if isinstance(v, TangentVector):
        v = v.vec
    x = np.asarray(x, dtype=np.float64)
    return normalize_rows(x + h * np.asarray(v, dtype=np.float64))


def exp_map_step(x, v, h: float) -> np.ndarray:
    """Шаг по геодезической: exp_x(h v) = cos(|hv|) x + sin(|hv|) v/|v|"""
    if isinstance(v, TangentVector):
        v = v.vec
    x = np.asarray(x, dtype=np.float64)
    hv = h * np.asarray(v, dtype=np.float64)
    theta = np.linalg.norm(hv, axis=-1, keepdims=True)
    safe = np.where(theta > 0, theta, 1.0)
    out = np.cos(theta) * x + np.where(theta > 0, np.sin(theta) / safe, 1.0) * hv
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def geodesic_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Угловое расстояние, устойчивое при малых углах (через atan2)"""
    cross = np.linalg.norm(project_rows(x, y), axis=-1)
    dot = np.sum(x * y, axis=-1)
    return np.arctan2(cross, dot)


def sample_uniform(rng: np.random.Generator, d: int, n: int = None) -> np.ndarray:
    """Равномерная выборка на S^{d-1} через нормированный гауссовский вектор"""
    if d < 2:
        raise ValueError("Размерность d должна быть не меньше 2")
    shape = (d,) if n is None else (n, d)
    while True:
        z = rng.standard_normal(shape)
        norms = np.linalg.norm(z, axis=-1, keepdims=True)
        if np.all(norms > DEGENERATE_NORM):
            return z / norms


def angles_of(points: np.ndarray) -> np.ndarray:
    """Азимутальные углы точек в [0, 2pi)"""
    return np.mod(np.arctan2(points[..., 1], points[..., 0]), 2.0 * np.pi)


def circle_points(angles) -> np.ndarray:
    a = np.asarray(angles, dtype=np.float64)
    return np.stack([np.cos(a), np.sin(a)], axis=-1)
