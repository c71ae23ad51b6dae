"""Начальные условия сценариев."""
import logging
from typing import Tuple, Union

import numpy as np

from ..core.exceptions import ConfigError
from ..models.mixture import CircleMixtureSpec
from ..models.particles import ParticleState
from ..models.scenario import Elevation, InitKind, InitSpec
from ..compute.sphere import sample_uniform

logger = logging.getLogger(__name__)


def sample_mixture_circle(
    spec: CircleMixtureSpec,
    n: int,
    rng: np.random.Generator,
    return_labels: bool = False,
) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    Независимые углы из смеси обёрнутых нормальных законов; номер компоненты
    выбирается для каждой точки отдельно.
    """
    weights = np.asarray(spec.weights, dtype=np.float64)
    labels = rng.choice(weights.size, size=n, p=weights / weights.sum())
    means = np.asarray(spec.means, dtype=np.float64)[labels]
    stds = spec.stds[labels]
    angles = np.mod(means + stds * rng.standard_normal(n), 2.0 * np.pi)
    return (angles, labels) if return_labels else angles


def embed_angles(angles: np.ndarray, d: int, elevation: np.ndarray = None) -> np.ndarray:
    """Углы на окружности плоскости (e_0, e_1) в S^{d-1}, с возвышением при d = 3"""
    points = np.zeros((angles.size, d))
    c = np.ones_like(angles) if elevation is None else np.cos(elevation)
    points[:, 0] = c * np.cos(angles)
    points[:, 1] = c * np.sin(angles)
    if elevation is not None:
        points[:, 2] = np.sin(elevation)
    return points


def sample_initial(init: InitSpec, rng: np.random.Generator) -> ParticleState:
    if init.kind == InitKind.UNIFORM:
        points = sample_uniform(rng, init.d, init.n)
    elif init.kind == InitKind.CIRCLE_MIXTURE:
        angles = sample_mixture_circle(init.mixture, init.n, rng)
        psi = None
        if init.elevation == Elevation.UNIFORM:
            psi = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size=init.n)
        points = embed_angles(angles, init.d, psi)
    elif init.kind == InitKind.POINTS:
        points = np.asarray(init.points, dtype=np.float64)
        points = points / np.linalg.norm(points, axis=1, keepdims=True)
    else:
        raise ConfigError(f"Неизвестный тип начального условия: {init.kind}")
    logger.debug("Начальное условие %s: N=%d d=%d", init.kind.value, init.n, init.d)
    return ParticleState(points=points)
