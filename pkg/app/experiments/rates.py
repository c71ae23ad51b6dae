"""Подгонка степенных скоростей и простые детекторы формы рядов."""
from typing import List, Sequence

import numpy as np
from scipy.stats import linregress

from ..models.scenario import RateFit


def fit_rate(xs: Sequence[float], ys: Sequence[float]) -> RateFit:
    """Прямая наименьших квадратов по (log x, log y)"""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size < 3 or x.size != y.size:
        raise ValueError("Для подгонки нужно не меньше трёх пар (x, y)")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("xs и ys должны быть положительными")
    res = linregress(np.log(x), np.log(y))
    return RateFit(
        xs=x.tolist(),
        ys=y.tolist(),
        slope=float(res.slope),
        intercept=float(res.intercept),
        r2=float(res.rvalue**2),
    )


def strictly_decreasing(values: Sequence[float]) -> bool:
    v = np.asarray(values, dtype=np.float64)
    return bool(np.all(np.diff(v) < 0))


def non_decreasing(values: Sequence[float], tol: float = 0.0) -> bool:
    v = np.asarray(values, dtype=np.float64)
    return bool(np.all(np.diff(v) >= -tol))


def plateau_labels(times: Sequence[float], values: Sequence[float], width: float = 0.5,
                   rel_tol: float = 1e-4) -> List[str]:
    """
    Разбивает ось log10 t на отрезки ширины width декад и помечает каждый
    как "plateau" (относительное изменение меньше rel_tol на декаду) или "jump"
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    keep = t > 0
    lt, v = np.log10(t[keep]), v[keep]
    if lt.size < 2:
        return []
    edges = np.arange(lt[0], lt[-1] + width, width)
    labels = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        inside = (lt >= lo) & (lt <= hi)
        if np.count_nonzero(inside) < 2:
            continue
        seg = v[inside]
        change = abs(seg[-1] - seg[0]) / max(abs(seg[0]), np.finfo(float).tiny)
        labels.append("plateau" if change < rel_tol * width else "jump")
    return labels


def count_plateau_jumps(times: Sequence[float], values: Sequence[float], width: float = 0.5,
                        rel_tol: float = 1e-4) -> int:
    """Число переходов плато -> скачок вдоль логарифмической оси времени"""
    labels = plateau_labels(times, values, width, rel_tol)
    return sum(1 for a, b in zip(labels, labels[1:]) if a == "plateau" and b == "jump")
