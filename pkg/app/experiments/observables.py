from typing import Dict, Iterable

import numpy as np

from ..compute.dynamics import Observer, closest_pair
from ..compute.metrics import cluster_detect, interaction_energy
from ..compute.spectral import dominant_invariant_subspace, subspace_distance
from ..models.params import ModelParams
from ..models.particles import ParticleState
from ..models.scenario import Observable


def build_observers(names: Iterable[Observable], p: ModelParams) -> Dict[str, Observer]:
    """Наблюдатели для интегратора по именам метрик"""
    observers: Dict[str, Observer] = {}
    for name in names:
        name = Observable(name)
        if name == Observable.SUBSPACE_DISTANCE:
            emax = dominant_invariant_subspace(p.interaction_matrix)
            observers[name.value] = lambda s, emax=emax: float(np.mean(subspace_distance(s.points, emax)))
        elif name == Observable.ENERGY:
            observers[name.value] = lambda s: interaction_energy(s, p).value
        elif name == Observable.LOG_ENERGY:
            observers[name.value] = lambda s: interaction_energy(s, p).log_energy
        elif name == Observable.NORM_DEVIATION:
            observers[name.value] = _norm_deviation
        elif name == Observable.CLUSTER_COUNT:
            observers[name.value] = lambda s: float(len(cluster_detect(s)))
        elif name == Observable.PAIR_INNER:
            observers[name.value] = lambda s: closest_pair(s)[2] if s.n > 1 else 1.0
    return observers


def _norm_deviation(s: ParticleState) -> float:
    return float(np.max(np.abs(np.linalg.norm(s.points, axis=1) - 1.0)))
