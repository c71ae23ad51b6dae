"""
Реестр сценариев численных экспериментов.

Матрицы сценариев 1a, 1b и 2a выбраны минимальными, удовлетворяющими
спектральным условиям сценария; все значения - конфигурация, а не константы кода.
"""
import logging
from typing import Optional

import numpy as np

from ..core.config import get_settings
from ..core.exceptions import ConfigError
from ..compute.spectral import dominant_invariant_subspace
from ..models.mixture import CircleMixtureSpec
from ..models.params import Clock, IntegratorConfig, ModelParams, Scheme
from ..models.run_config import RunConfigBase
from ..models.scenario import Elevation, InitKind, InitSpec, Observable, Scenario, ScenarioId

logger = logging.getLogger(__name__)

DESK_MAX_N = 5000
DESK_MAX_STEPS = 10_000

SCENARIO_2A_MIXTURE = CircleMixtureSpec(
    weights=[0.2, 0.5, 0.3],
    means=[np.pi / 2, 0.0, 4 * np.pi / 3],
    # sigma_0 = 0.2 трактуется как время нагрева sigma_0^2
    heat_var=0.04,
)

FULL_STORY_MIXTURE = CircleMixtureSpec(
    weights=[0.15, 0.35, 0.2, 0.3],
    means=[0.0, 1.0, 2.4, 3.9],
    heat_var=0.04,
)

ROTATION_V = [[1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]


def _eye(d: int) -> np.ndarray:
    return np.eye(d)


def scenario_defaults(scenario_id, desk_scale: bool = False, seed: Optional[int] = None) -> Scenario:
    """Сценарий с параметрами по умолчанию"""
    try:
        sid = ScenarioId(scenario_id)
    except ValueError:
        raise ConfigError(f"Неизвестный сценарий: {scenario_id}")
    seed = get_settings().DEFAULT_SEED if seed is None else seed

    if sid in (ScenarioId.ALIGN_COLLAPSE, ScenarioId.ALIGN_ROTATION):
        v = np.diag([2.0, 1.0, 1.0]) if sid == ScenarioId.ALIGN_COLLAPSE else np.array(ROTATION_V)
        scenario = Scenario(
            id=sid,
            params=ModelParams(Q=_eye(3), K=_eye(3), V=v, beta=30.0),
            init=InitSpec(kind=InitKind.UNIFORM, n=10_000, d=3),
            cfg=IntegratorConfig(scheme=Scheme.PROJECTED_EULER, h=1e-2, max_steps=400, stride=10),
            observables=[Observable.SUBSPACE_DISTANCE],
            seed=seed,
        )
    elif sid == ScenarioId.HEAT_BACKWARD:
        scenario = Scenario(
            id=sid,
            params=ModelParams(Q=_eye(3), K=_eye(3), V=np.diag([1.0, 1.0, 0.5]), beta=10.0),
            init=InitSpec(kind=InitKind.CIRCLE_MIXTURE, n=5000, d=3,
                          mixture=SCENARIO_2A_MIXTURE, elevation=Elevation.UNIFORM),
            cfg=IntegratorConfig(scheme=Scheme.PROJECTED_EULER, h=1e-3, clock=Clock.HEAT,
                                 max_steps=1000, stride=50),
            observables=[Observable.CLUSTER_COUNT],
            seed=seed,
            gamma=1,
        )
    elif sid == ScenarioId.HEAT_FORWARD:
        scenario = Scenario(
            id=sid,
            params=ModelParams.identity(2, beta=50.0, v_sign=-1.0),
            init=InitSpec(kind=InitKind.CIRCLE_MIXTURE, n=50_000, d=2, mixture=SCENARIO_2A_MIXTURE),
            cfg=IntegratorConfig(scheme=Scheme.PROJECTED_EULER, h=1e-3, clock=Clock.HEAT,
                                 max_steps=100, stride=10),
            observables=[],
            seed=seed,
            gamma=-1,
        )
    elif sid == ScenarioId.FULL_STORY:
        scenario = Scenario(
            id=sid,
            params=ModelParams.identity(2, beta=10.0),
            init=InitSpec(kind=InitKind.CIRCLE_MIXTURE, n=400, d=2, mixture=FULL_STORY_MIXTURE),
            cfg=IntegratorConfig(scheme=Scheme.PROJECTED_EULER, h=5e-2, max_steps=4000, stride=20),
            observables=[Observable.ENERGY],
            seed=seed,
            gamma=1,
        )
    else:
        raise ConfigError("Сценарий custom задаётся явной конфигурацией")

    return desk_scaled(scenario) if desk_scale else scenario


def desk_scaled(scenario: Scenario) -> Scenario:
    """Уменьшает N и число шагов до настольного масштаба"""
    init = scenario.init
    if init.kind != InitKind.POINTS and init.n > DESK_MAX_N:
        init = init.model_copy(update={"n": DESK_MAX_N})
    cfg = scenario.cfg
    if cfg.max_steps > DESK_MAX_STEPS:
        cfg = cfg.model_copy(update={"max_steps": DESK_MAX_STEPS})
    return scenario.model_copy(update={"init": init, "cfg": cfg})


def heat_gamma(p: ModelParams, tol: float = 1e-8) -> Optional[int]:
    """+1, если V на E_max равна +Id; -1, если -Id; иначе None"""
    basis = dominant_invariant_subspace(p.interaction_matrix).basis
    restricted = basis @ p.V @ basis.T
    eye = np.eye(basis.shape[0])
    if np.allclose(restricted, eye, atol=tol):
        return 1
    if np.allclose(restricted, -eye, atol=tol):
        return -1
    return None


def resolve_scenario(cfg: RunConfigBase, desk_scale: bool = False, seed: Optional[int] = None) -> Scenario:
    """Сценарий из конфигурации: значения по умолчанию плюс явные поля"""
    try:
        scenario = _resolve(cfg, seed)
    except ValueError as exc:
        raise ConfigError(f"Некорректная конфигурация сценария: {exc}") from exc
    logger.info("Сценарий %s: beta=%g N=%d d=%d", scenario.id.value, scenario.params.beta,
                scenario.init.n, scenario.init.d)
    return desk_scaled(scenario) if desk_scale else scenario


def _resolve(cfg: RunConfigBase, seed: Optional[int]) -> Scenario:
    seed = seed if seed is not None else cfg.seed
    if cfg.scenario == ScenarioId.CUSTOM:
        init = cfg.init or InitSpec(kind=InitKind.UNIFORM, n=cfg.n, d=cfg.d)
        d = init.d
        scenario = Scenario(
            id=ScenarioId.CUSTOM,
            params=ModelParams(
                Q=cfg.Q if cfg.Q is not None else _eye(d),
                K=cfg.K if cfg.K is not None else _eye(d),
                V=cfg.V if cfg.V is not None else _eye(d),
                beta=cfg.beta,
            ),
            init=init,
            cfg=cfg.integrator or IntegratorConfig(stride=get_settings().SNAPSHOT_STRIDE),
            observables=cfg.observables or [],
            seed=get_settings().DEFAULT_SEED if seed is None else seed,
        )
        return scenario.model_copy(update={"gamma": heat_gamma(scenario.params)})

    scenario = scenario_defaults(cfg.scenario, desk_scale=False, seed=seed)
    params = scenario.params
    updates = {name: getattr(cfg, name) for name in ("Q", "K", "V") if getattr(cfg, name) is not None}
    if cfg.beta is not None:
        updates["beta"] = cfg.beta
    if updates:
        params = ModelParams(**{**{"Q": params.Q, "K": params.K, "V": params.V, "beta": params.beta}, **updates})

    init = cfg.init or scenario.init
    if cfg.init is None and (cfg.n is not None or cfg.d is not None):
        init = InitSpec(**{**init.model_dump(), "n": cfg.n or init.n, "d": cfg.d or init.d})

    return Scenario(
        id=scenario.id,
        params=params,
        init=init,
        cfg=cfg.integrator or scenario.cfg,
        observables=cfg.observables if cfg.observables is not None else scenario.observables,
        seed=scenario.seed,
        gamma=scenario.gamma if not updates else heat_gamma(params),
    )
