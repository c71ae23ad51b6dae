"""
Динамика частиц: поле самовнимания при конечном beta, интеграторы и три
предельные динамики (выравнивание, тепловая фаза, парная фаза).
"""
import logging
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from scipy.linalg import expm

from ..core.config import get_settings
from ..core.exceptions import AssumptionViolation, ClockOverflowError, ConfigError, NumericalError
from ..models.params import Clock, IntegratorConfig, ModelParams, Scheme
from ..models.particles import MetricPoint, ParticleState, Trajectory
from ..models.sphere import TangentVector, as_unit_vector
from .kernels import softmax_average
from .sphere import normalize_rows, project_rows

logger = logging.getLogger(__name__)

ObserverValue = Union[float, Tuple[float, float]]
Observer = Callable[[ParticleState], ObserverValue]
FieldFn = Callable[[np.ndarray], np.ndarray]

PAIR_TIE_TOL = 1e-12
ALIGNMENT_MIN_NORM = 1e-12


# ---------------------------------------------------------------------------
# Поле самовнимания

def attention_average(points: np.ndarray, p: ModelParams, targets: Optional[np.ndarray] = None) -> np.ndarray:
    """sum_j softmax_j(beta <Q x_i, K x_j>) V x_j до проекции"""
    tgt = points if targets is None else targets
    return softmax_average(tgt, points, p.Q, p.K, p.V, p.beta)


def attention_field_rows(points: np.ndarray, p: ModelParams) -> np.ndarray:
    """chi_beta в каждой частице; точки могут быть не единичными (стадии RK)"""
    return project_rows(points, attention_average(points, p))


def attention_field(s: ParticleState, p: ModelParams) -> np.ndarray:
    """Касательное поле (N, d): строка i касается сферы в x_i"""
    return attention_field_rows(s.points, p)


def discrete_layer_step(s: ParticleState, p: ModelParams) -> ParticleState:
    """Один слой: x_i <- N(x_i + sum_j softmax V x_j), без касательной проекции"""
    new = normalize_rows(s.points + attention_average(s.points, p), step=s.step + 1)
    return s.advanced(new, dt=1.0, ds=1.0)


def rescaled_heat_field(s: ParticleState, p: ModelParams, i: int) -> TangentVector:
    """beta * chi_beta в частице i"""
    x = s.points[i]
    avg = attention_average(s.points, p, targets=s.points[i:i + 1])[0]
    return TangentVector(base=x, vec=p.beta * project_rows(x, avg))


# ---------------------------------------------------------------------------
# Фаза выравнивания

def alignment_field_rows(points: np.ndarray, p: ModelParams) -> np.ndarray:
    """P_x(V K^T Q x / |K^T Q x|) построчно"""
    bx = points @ p.key_query.T
    norms = np.linalg.norm(bx, axis=1, keepdims=True)
    bad = np.flatnonzero(norms.ravel() < ALIGNMENT_MIN_NORM)
    if bad.size:
        raise AssumptionViolation("|K^T Q x| почти ноль: K^T Q необратима", particle=int(bad[0]))
    return project_rows(points, (bx / norms) @ p.V.T)


def alignment_field(x, p: ModelParams) -> TangentVector:
    x = as_unit_vector(x)
    return TangentVector(base=x, vec=alignment_field_rows(x[None, :], p)[0])


def alignment_linear_flow(x0: np.ndarray, p: ModelParams, times) -> np.ndarray:
    """
    Нормированное решение z' = V K^T Q z; совпадает с потоком выравнивания
    с точностью до замены времени. Форма результата (len(times), N, d)
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    m = p.interaction_matrix
    out = np.empty((len(times), *x0.shape))
    for k, t in enumerate(times):
        z = x0 @ expm(t * m).T
        out[k] = z / np.linalg.norm(z, axis=1, keepdims=True)
    return out


# ---------------------------------------------------------------------------
# Парная фаза

def closest_pair(s: ParticleState, tie_tol: float = PAIR_TIE_TOL) -> Tuple[int, int, float]:
    """Пара с максимальным скалярным произведением; ничьи - лексикографически"""
    if s.n < 2:
        raise ValueError("Нужно хотя бы две частицы")
    gram = s.points @ s.points.T
    iu, ju = np.triu_indices(s.n, k=1)
    vals = gram[iu, ju]
    k = int(np.flatnonzero(vals >= vals.max() - tie_tol)[0])
    return int(iu[k]), int(ju[k]), float(vals[k])


def closest_pair_is_unique(s: ParticleState, tol: float = 1e-9) -> bool:
    gram = s.points @ s.points.T
    vals = gram[np.triu_indices(s.n, k=1)]
    return int(np.count_nonzero(vals >= vals.max() - tol)) == 1


def pairing_limit_rows(points: np.ndarray, pair: Tuple[int, int]) -> np.ndarray:
    i, j = pair
    field = np.zeros_like(points)
    field[i] = points[j] - (points[i] @ points[j]) * points[i]
    field[j] = points[i] - (points[j] @ points[i]) * points[j]
    return field


def pairing_limit_field(s: ParticleState, pair: Tuple[int, int]) -> np.ndarray:
    """P_{y_i}(y_j) в i, P_{y_j}(y_i) в j, ноль в остальных"""
    i, j = pair
    if i == j or not (0 <= i < s.n and 0 <= j < s.n):
        raise ValueError(f"Некорректная пара {pair}")
    return pairing_limit_rows(s.points, pair)


def pairing_clock_factor(points: np.ndarray, pair: Tuple[int, int], beta: float, step: int = None) -> float:
    """e^{beta (1 - d_t)}, d_t = <x_i, x_j>"""
    exponent = beta * (1.0 - float(points[pair[0]] @ points[pair[1]]))
    cap = get_settings().PAIRING_CLOCK_CAP
    if exponent > cap:
        raise ClockOverflowError(
            f"Множитель часов парной фазы e^{exponent:.1f} превышает предел e^{cap:.0f}", step=step
        )
    return float(np.exp(exponent))


# ---------------------------------------------------------------------------
# Интегрирование

def _advance(points: np.ndarray, field: FieldFn, scheme: Scheme, h: float, step: int) -> np.ndarray:
    if scheme == Scheme.PROJECTED_EULER:
        return normalize_rows(points + h * field(points), step=step)
    if scheme == Scheme.PROJECTED_RK4:
        # Стадии без нормализации: сфера инвариантна для продолжения P_x y
        k1 = field(points)
        k2 = field(points + 0.5 * h * k1)
        k3 = field(points + 0.5 * h * k2)
        k4 = field(points + h * k3)
        return normalize_rows(points + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), step=step)
    raise ConfigError(f"Схема {scheme} не поддерживает непрерывные часы")


def _observe(observers: Mapping[str, Observer], state: ParticleState, metrics: Dict[str, list]) -> None:
    for name, fn in observers.items():
        value = fn(state)
        stderr = None
        if isinstance(value, tuple):
            value, stderr = value
        metrics.setdefault(name, []).append(
            MetricPoint(step=state.step, t=state.time, rescaled_time=state.rescaled_time,
                        value=float(value), stderr=stderr)
        )


def _run(
    s0: ParticleState,
    step_fn: Callable[[ParticleState], ParticleState],
    max_steps: int,
    stride: int,
    keep_snapshots: bool,
    observers: Optional[Mapping[str, Observer]],
    stop_fn: Optional[Callable[[ParticleState], Optional[str]]] = None,
) -> Trajectory:
    observers = observers or {}
    metrics: Dict[str, list] = {}
    snapshots = [s0] if keep_snapshots else []
    _observe(observers, s0, metrics)

    state = s0
    halted = None
    for _ in range(max_steps):
        try:
            state = step_fn(state)
        except NumericalError as exc:
            if exc.step is None:
                exc.step = state.step + 1
                exc.add_context(f"шаг {exc.step}")
            raise
        last = state.step % stride == 0
        if stop_fn is not None:
            halted = stop_fn(state)
        if last or halted:
            if keep_snapshots:
                snapshots.append(state)
            _observe(observers, state, metrics)
            logger.debug("step %d t=%.6g s=%.6g", state.step, state.time, state.rescaled_time)
        if halted:
            logger.info("Интегрирование остановлено на шаге %d: %s", state.step, halted)
            break

    if state.step % stride != 0 and not halted:
        if keep_snapshots:
            snapshots.append(state)
        _observe(observers, state, metrics)
    return Trajectory(snapshots=snapshots, metrics=metrics, final=state, steps=state.step - s0.step, halted=halted)


def integrate(
    s0: ParticleState,
    p: ModelParams,
    cfg: IntegratorConfig,
    observers: Optional[Mapping[str, Observer]] = None,
) -> Trajectory:
    """Интегрирует динамику (SA) выбранной схемой в выбранных часах"""
    scheme, clock, h = Scheme(cfg.scheme), Clock(cfg.clock), cfg.h
    logger.info("integrate: N=%d d=%d beta=%g scheme=%s clock=%s h=%g steps=%d",
                s0.n, s0.d, p.beta, scheme.value, clock.value, h, cfg.max_steps)

    if scheme == Scheme.DISCRETE_LAYER:
        if clock != Clock.PLAIN:
            raise ConfigError("Схема discrete-layer совместима только с часами plain")
        return _run(s0, lambda s: discrete_layer_step(s, p), cfg.max_steps, cfg.stride,
                    cfg.keep_snapshots, observers)

    stop_fn = None
    if clock == Clock.PLAIN:
        def step_fn(s: ParticleState) -> ParticleState:
            new = _advance(s.points, lambda x: attention_field_rows(x, p), scheme, h, s.step + 1)
            return s.advanced(new, dt=h, ds=h)

    elif clock == Clock.HEAT:
        def step_fn(s: ParticleState) -> ParticleState:
            new = _advance(s.points, lambda x: p.beta * attention_field_rows(x, p), scheme, h, s.step + 1)
            return s.advanced(new, dt=p.beta * h, ds=h)

    else:
        if not closest_pair_is_unique(s0):
            raise ConfigError("Часы парной фазы требуют единственной ближайшей пары в начальный момент")
        pair = closest_pair(s0)[:2]
        logger.info("Ближайшая пара: %s", pair)

        def step_fn(s: ParticleState) -> ParticleState:
            c = pairing_clock_factor(s.points, pair, p.beta, step=s.step + 1)
            new = _advance(s.points, lambda x: c * attention_field_rows(x, p), scheme, h, s.step + 1)
            return s.advanced(new, dt=c * h, ds=h)

        if cfg.pair_eps is not None:
            def stop_fn(s: ParticleState) -> Optional[str]:
                if s.points[pair[0]] @ s.points[pair[1]] > 1.0 - cfg.pair_eps:
                    return f"pair {pair} reached 1 - {cfg.pair_eps}"
                return None

    return _run(s0, step_fn, cfg.max_steps, cfg.stride, cfg.keep_snapshots, observers, stop_fn)


def integrate_alignment(
    s0: ParticleState,
    p: ModelParams,
    h: float,
    T: float,
    observers: Optional[Mapping[str, Observer]] = None,
    stride: int = 10,
    scheme: Scheme = Scheme.PROJECTED_RK4,
    keep_snapshots: bool = True,
) -> Trajectory:
    """Поток выравнивания: каждая частица движется независимо"""
    if h <= 0 or T < 0:
        raise ValueError("Ожидается h > 0 и T >= 0")
    steps = int(round(T / h))

    def step_fn(s: ParticleState) -> ParticleState:
        new = _advance(s.points, lambda x: alignment_field_rows(x, p), scheme, h, s.step + 1)
        return s.advanced(new, dt=h, ds=h)

    return _run(s0, step_fn, max(steps, 0), stride, keep_snapshots, observers)


def integrate_pairing_limit(
    s0: ParticleState,
    h: float,
    eps: float,
    max_steps: int,
    pair: Optional[Tuple[int, int]] = None,
    observers: Optional[Mapping[str, Observer]] = None,
    stride: int = 10,
    keep_snapshots: bool = True,
) -> Trajectory:
    """
    Предельная система парной фазы в перемасштабированном времени; останавливается,
    когда <y_i, y_j> > 1 - eps (момент T_eps)
    """
    if pair is None:
        if not closest_pair_is_unique(s0):
            raise ConfigError("Ближайшая пара не единственна")
        pair = closest_pair(s0)[:2]

    def step_fn(s: ParticleState) -> ParticleState:
        new = _advance(s.points, lambda x: pairing_limit_rows(x, pair), Scheme.PROJECTED_RK4, h, s.step + 1)
        return s.advanced(new, dt=h, ds=h)

    def stop_fn(s: ParticleState) -> Optional[str]:
        if s.points[pair[0]] @ s.points[pair[1]] > 1.0 - eps:
            return f"pair {tuple(pair)} reached 1 - {eps}"
        return None

    return _run(s0, step_fn, max_steps, stride, keep_snapshots, observers, stop_fn)
