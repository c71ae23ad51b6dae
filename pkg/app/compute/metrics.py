"""
Метрики конфигураций частиц: расстояния Вассерштейна, энергия взаимодействия,
ядерная оценка плотности на окружности, поиск кластеров и квадратурная
оценка поля chi_beta против гладкой плотности.
"""
import logging
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.stats import wasserstein_distance

from ..core.config import get_settings
from ..core.exceptions import ClusterError, QuadratureError
from ..models.params import ModelParams
from ..models.particles import Cluster, ClusterSet, EmpiricalMeasure, ParticleState
from ..models.sphere import TangentVector, as_unit_vector
from .heat import heat_kernel_circle
from .kernels import shifted_energy_sum
from .sphere import angles_of, circle_points, project_rows, sample_uniform

logger = logging.getLogger(__name__)

Density = Callable[[np.ndarray], np.ndarray]

QUAD_ABS_TOL = 1e-12
QUAD_MAX_NODES = 1 << 20
CENTROID_MIN_NORM = 1e-10


# ---------------------------------------------------------------------------
# W1

def _as_measure(m) -> EmpiricalMeasure:
    if isinstance(m, EmpiricalMeasure):
        return m
    if isinstance(m, ParticleState):
        return EmpiricalMeasure.from_state(m)
    return EmpiricalMeasure.uniform(m)


def w1_circle(a, b) -> float:
    """
    W1 на S^1 с геодезической стоимостью.

    Используется точная формула W1 = min_c ∫ |F - G - c| dθ: оптимальная
    константа c - медиана F - G по мере Лебега.
    """
    a, b = _as_measure(a), _as_measure(b)
    if a.d != 2 or b.d != 2:
        raise ValueError(f"w1_circle определена только на S^1, получены d={a.d} и d={b.d}")

    theta = np.concatenate([angles_of(a.points), angles_of(b.points)])
    mass = np.concatenate([a.weights, -b.weights])
    order = np.argsort(theta, kind="stable")
    theta, mass = theta[order], mass[order]

    diff = np.cumsum(mass)
    # Последний интервал охватывает переход через 0 и имеет F - G = 0
    diff[-1] = 0.0
    lengths = np.empty_like(theta)
    lengths[:-1] = np.diff(theta)
    lengths[-1] = 2.0 * np.pi - theta[-1] + theta[0]

    by_level = np.argsort(diff, kind="stable")
    cum = np.cumsum(lengths[by_level])
    median = diff[by_level][np.searchsorted(cum, 0.5 * cum[-1])]
    return float(np.sum(lengths * np.abs(diff - median)))


def w1_circle_to_density(a, density: Callable[[np.ndarray], np.ndarray], bins: int = None) -> float:
    """
    W1 на S^1 между эмпирической мерой и плотностью по углу, дискретизированной
    на равномерной сетке из bins ячеек
    """
    bins = get_settings().W1_GRID_BINS if bins is None else bins
    centers = 2.0 * np.pi * (np.arange(bins) + 0.5) / bins
    mass = np.asarray(density(centers), dtype=np.float64)
    if np.any(mass < 0) or not np.all(np.isfinite(mass)):
        raise ValueError("Плотность должна быть конечной и неотрицательной")
    grid = EmpiricalMeasure(points=circle_points(centers), weights=mass / mass.sum())
    return w1_circle(a, grid)


def sliced_w1_sphere(a, b, n_proj: int = None, rng: Optional[np.random.Generator] = None) -> Tuple[float, float]:
    """
    Срезанное W1: среднее по случайным направлениям u одномерного W1 между
    проекциями <u, x>. Возвращает (значение, стандартная ошибка).
    """
    a, b = _as_measure(a), _as_measure(b)
    if a.d != b.d:
        raise ValueError(f"Размерности мер различаются: {a.d} и {b.d}")
    n_proj = get_settings().SLICED_N_PROJ if n_proj is None else n_proj
    if n_proj < 1:
        raise ValueError("n_proj должен быть не меньше 1")
    rng = np.random.default_rng(0) if rng is None else rng

    directions = sample_uniform(rng, a.d, n_proj)
    pa = a.points @ directions.T
    pb = b.points @ directions.T
    values = np.array([
        wasserstein_distance(pa[:, k], pb[:, k], a.weights, b.weights) for k in range(n_proj)
    ])
    stderr = float(values.std(ddof=1) / np.sqrt(n_proj)) if n_proj > 1 else 0.0
    return float(values.mean()), stderr


# ---------------------------------------------------------------------------
# Энергия

class EnergyReport(BaseModel):
    """Сдвинутая энергия, сдвиг M и флаг симметрии Q^T K"""

    value: float
    shift: float
    beta: float
    symmetric: bool

    @property
    def log_energy(self) -> float:
        """log абсолютной энергии; сравним между моментами времени при любом M"""
        return float(np.log(self.value) + self.beta * self.shift)


def interaction_energy(s: ParticleState, p: ModelParams) -> EnergyReport:
    """E = (1 / 2 beta N^2) sum_{i,j} exp(beta(<Q x_i, K x_j> - M))"""
    qk = p.Q.T @ p.K
    symmetric = bool(np.allclose(qk, qk.T, atol=1e-12 * max(1.0, np.abs(qk).max())))
    if not symmetric:
        logger.warning("Q^T K несимметрична: энергия не является функционалом градиентного потока")
    total, shift = shifted_energy_sum(s.points, p.Q, p.K, p.beta)
    return EnergyReport(value=total / (2.0 * p.beta * s.n**2), shift=shift, beta=p.beta, symmetric=symmetric)


# ---------------------------------------------------------------------------
# Кластеры

def cluster_detect(s, angular_tol: float = None, weights: Optional[np.ndarray] = None) -> ClusterSet:
    """
    Одиночная связь по геодезическому порогу angular_tol. Кластеры нумеруются
    по первому входящему в них индексу.
    """
    tol = get_settings().CLUSTER_ANGULAR_TOL if angular_tol is None else angular_tol
    if not 0 < tol < np.pi:
        raise ValueError("angular_tol должен лежать в (0, pi)")
    points = s.points if isinstance(s, ParticleState) else np.asarray(s, dtype=np.float64)
    n = points.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=np.float64)
    w = w / w.sum()

    # Геодезическое расстояние <= tol эквивалентно хорде <= 2 sin(tol / 2)
    pairs = cKDTree(points).query_pairs(2.0 * np.sin(0.5 * tol), output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, raw = connected_components(graph, directed=False)

    _, first = np.unique(raw, return_index=True)
    relabel = np.empty(first.size, dtype=np.int64)
    relabel[np.argsort(first, kind="stable")] = np.arange(first.size)
    labels = relabel[raw]

    clusters = []
    for k in range(first.size):
        members = labels == k
        mean = (w[members, None] * points[members]).sum(axis=0)
        norm = np.linalg.norm(mean)
        if norm < CENTROID_MIN_NORM * w[members].sum():
            raise ClusterError(f"Вырожденный центроид кластера {k}: взвешенное среднее почти ноль")
        clusters.append(Cluster(centroid=mean / norm, weight=float(w[members].sum()),
                                member_count=int(members.sum())))
    logger.debug("cluster_detect: %d кластеров при tol=%g", len(clusters), tol)
    return ClusterSet(clusters=clusters, labels=labels)


# ---------------------------------------------------------------------------
# Плотность на окружности

def kde_circle(angles, bandwidth: float, grid_size: int = 512, chunk: int = 1024) -> Tuple[np.ndarray, np.ndarray]:
    """Оценка плотности обёрнутым гауссовым ядром на равномерной сетке [0, 2pi)"""
    if bandwidth <= 0:
        raise ValueError("bandwidth должна быть положительной")
    th = np.asarray(angles, dtype=np.float64).ravel()
    if th.size == 0:
        raise ValueError("Нужен хотя бы один угол")
    grid = 2.0 * np.pi * np.arange(grid_size) / grid_size
    # Обёрнутая нормаль с ст. откл. bw - тепловое ядро в момент bw^2 / 2
    t = 0.5 * bandwidth**2
    density = np.zeros(grid_size)
    for start in range(0, th.size, chunk):
        block = th[start:start + chunk]
        density += heat_kernel_circle(grid[:, None] - block[None, :], t).sum(axis=1)
    mass = density.sum() * 2.0 * np.pi / grid_size
    if not mass > 0:
        raise ValueError("bandwidth слишком мала для шага сетки: ядро не попадает в узлы")
    # Нормировка по сетке: при ширине порядка шага сетки сумма ядер в узлах не равна 1
    return grid, density / mass


# ---------------------------------------------------------------------------
# Квадратура chi_beta

def _weighted_average(nodes: np.ndarray, weights: np.ndarray, x: np.ndarray, p: ModelParams) -> np.ndarray:
    logits = p.beta * ((nodes @ p.K.T) @ (p.Q @ x))
    e = np.exp(logits - logits.max()) * weights
    return (e @ (nodes @ p.V.T)) / e.sum()


def _circle_rule(density: Density, n: int):
    phi = 2.0 * np.pi * np.arange(n) / n
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    return nodes, density(nodes) * (2.0 * np.pi / n)


def _frame(pole: np.ndarray) -> np.ndarray:
    basis, _ = np.linalg.qr(np.column_stack([pole, np.eye(pole.size)]))
    if basis[:, 0] @ pole < 0:
        basis = -basis
    return basis


def _s2_rule(density: Density, n: int, pole: np.ndarray):
    # Гаусс-Лежандр по t = <pole, y>, трапеции по азимуту
    t, wt = np.polynomial.legendre.leggauss(n)
    phi = 2.0 * np.pi * np.arange(2 * n) / (2 * n)
    frame = _frame(pole)
    tt, pp = np.meshgrid(t, phi, indexing="ij")
    rr = np.sqrt(1.0 - tt**2)
    local = np.stack([tt, rr * np.cos(pp), rr * np.sin(pp)], axis=-1).reshape(-1, 3)
    nodes = local @ frame.T
    w = np.repeat(wt, 2 * n) * (np.pi / n)
    return nodes, density(nodes) * w


def kernel_field_quadrature(density: Density, p: ModelParams, x, n_quad: int = 64) -> TangentVector:
    """
    P_x(∫ e^{beta <Qx, Ky>} V y dmu / ∫ e^{beta <Qx, Ky>} dmu) для mu с плотностью density.

    Число узлов удваивается, пока изменение не станет меньше 1e-12.
    """
    x = as_unit_vector(x)
    if x.size != p.d:
        raise ValueError("Размерность точки не совпадает с параметрами")
    if p.d not in (2, 3):
        raise QuadratureError(f"Квадратура поддерживается только для d = 2 и d = 3, получено d={p.d}")

    pole = p.key_query @ x
    pole = pole / np.linalg.norm(pole) if np.linalg.norm(pole) > 0 else x

    def rule(n):
        nodes, w = _circle_rule(density, n) if p.d == 2 else _s2_rule(density, n, pole)
        if np.any(w <= 0):
            raise QuadratureError("Плотность должна быть положительной во всех узлах")
        return _weighted_average(nodes, w, x, p)

    n = n_quad
    prev = rule(n)
    while True:
        n *= 2
        limit = QUAD_MAX_NODES if p.d == 2 else 1024
        if n > limit:
            raise QuadratureError(f"Квадратура chi_beta не сошлась (beta={p.beta}, узлов {n // 2})")
        cur = rule(n)
        if np.max(np.abs(cur - prev)) <= QUAD_ABS_TOL * max(1.0, float(np.max(np.abs(cur)))):
            break
        prev = cur
    return TangentVector(base=x, vec=project_rows(x, cur))
