"""
Аналитический оракул тепловой фазы: тепловые ядра на S^1 и S^{d-1} и эволюция
смесей тепловых ядер. Параметр дисперсии - время нагрева: N(m, s) = exp(s Δ) δ_m.
"""
import logging
from typing import List, Tuple

import numpy as np
from scipy.special import eval_gegenbauer, gammaln

from ..core.config import get_settings
from ..core.exceptions import HeatCollapseError, NumericalError
from ..models.mixture import HeatComponent, HeatMixture
from .sphere import angles_of, geodesic_distance
from .special import sphere_area

logger = logging.getLogger(__name__)

SERIES_TAIL = 1e-14
SPHERE_T_FLOOR = 1e-6
MAX_SERIES_TERMS = 50000


def _wrap(theta) -> np.ndarray:
    return np.mod(np.asarray(theta, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi


def _image_range(t: float) -> int:
    # exp(-(2pi k - pi)^2 / 4t) < 1e-17 при k > k_max
    return int(np.ceil((np.sqrt(4.0 * t * 40.0) + np.pi) / (2.0 * np.pi))) + 1


def _fourier_range(t: float) -> int:
    return int(np.ceil(np.sqrt(40.0 / t))) + 1


def heat_kernel_circle_images(theta, t: float) -> np.ndarray:
    th = _wrap(theta)
    ks = np.arange(-_image_range(t), _image_range(t) + 1)
    shifted = th[..., None] + 2.0 * np.pi * ks
    return np.exp(-shifted**2 / (4.0 * t)).sum(axis=-1) / np.sqrt(4.0 * np.pi * t)


def heat_kernel_circle_fourier(theta, t: float) -> np.ndarray:
    th = np.asarray(theta, dtype=np.float64)
    n = np.arange(1, _fourier_range(t) + 1)
    terms = np.exp(-(n**2) * t) * np.cos(th[..., None] * n)
    return (1.0 + 2.0 * terms.sum(axis=-1)) / (2.0 * np.pi)


def heat_kernel_circle(theta, t: float, crossover: float = None):
    """Плотность exp(t Δ) δ_0 на S^1 при угловом смещении theta"""
    if t <= 0:
        raise ValueError("Время нагрева t должно быть положительным")
    cross = get_settings().HEAT_KERNEL_CROSSOVER if crossover is None else crossover
    out = heat_kernel_circle_images(theta, t) if t < cross else heat_kernel_circle_fourier(theta, t)
    return float(out) if np.ndim(out) == 0 else out


def heat_kernel_circle_dtheta(theta, t: float, crossover: float = None):
    """Производная теплового ядра S^1 по theta"""
    if t <= 0:
        raise ValueError("Время нагрева t должно быть положительным")
    cross = get_settings().HEAT_KERNEL_CROSSOVER if crossover is None else crossover
    if t < cross:
        th = _wrap(theta)
        ks = np.arange(-_image_range(t), _image_range(t) + 1)
        shifted = th[..., None] + 2.0 * np.pi * ks
        g = np.exp(-shifted**2 / (4.0 * t)) * (-shifted / (2.0 * t))
        out = g.sum(axis=-1) / np.sqrt(4.0 * np.pi * t)
    else:
        th = np.asarray(theta, dtype=np.float64)
        n = np.arange(1, _fourier_range(t) + 1)
        out = -(np.exp(-(n**2) * t) * n * np.sin(th[..., None] * n)).sum(axis=-1) / np.pi
    return float(out) if np.ndim(out) == 0 else out


def _sphere_terms(t: float, d: int) -> int:
    lam = 0.5 * (d - 2)
    for ell in range(MAX_SERIES_TERMS):
        # |C_l^lam(x)| <= C_l^lam(1) = Gamma(l + 2 lam) / (Gamma(2 lam) l!)
        log_c1 = gammaln(ell + 2 * lam) - gammaln(2 * lam) - gammaln(ell + 1)
        log_term = -ell * (ell + d - 2) * t + np.log((2 * ell + d - 2) / (d - 2)) + log_c1
        if ell > 0 and log_term < np.log(SERIES_TAIL):
            return ell
    raise NumericalError(f"Ряд теплового ядра не сходится за {MAX_SERIES_TERMS} членов (t={t})")


def heat_kernel_sphere(cos_angle, t: float, d: int):
    """Тепловое ядро на S^{d-1}, d >= 3, как ряд Гегенбауэра"""
    if d < 3:
        raise ValueError("Для d = 2 используйте heat_kernel_circle")
    if t < SPHERE_T_FLOOR:
        raise NumericalError(
            f"t = {t:.3e} ниже порога сходимости ряда {SPHERE_T_FLOOR:.0e}; используйте больше членов "
            "или специализацию для окружности"
        )
    x = np.clip(np.asarray(cos_angle, dtype=np.float64), -1.0, 1.0)
    lam = 0.5 * (d - 2)
    ells = np.arange(_sphere_terms(t, d))
    coef = np.exp(-ells * (ells + d - 2) * t) * (2 * ells + d - 2) / (d - 2)
    poly = eval_gegenbauer(ells[:, None], lam, x.ravel()[None, :])
    out = (coef[:, None] * poly).sum(axis=0).reshape(x.shape) / sphere_area(d)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Смеси

def mixture_evolve(m: HeatMixture, t: float, gamma: int, collapse: str = "error") -> HeatMixture:
    """
    Решение d_t mu = -gamma Δ mu: дисперсии var_j - gamma t.

    collapse="dirac" превращает схлопнувшиеся компоненты в дираки, которые
    остаются на месте, пока остальные продолжают эволюцию.
    """
    if gamma not in (1, -1):
        raise ValueError("gamma должна быть +1 или -1")
    if t < 0:
        raise ValueError("t должно быть неотрицательным")
    if collapse not in ("error", "dirac"):
        raise ValueError("collapse: 'error' или 'dirac'")
    if t == 0:
        return m

    elapsed = m.elapsed - gamma * t
    components = []
    for j, c in enumerate(m.components):
        if c.dirac:
            if gamma == -1:
                c = HeatComponent(center=c.center, base_var=t - elapsed, weight=c.weight)
            components.append(c)
            continue
        if c.base_var + elapsed <= 0:
            if collapse == "error":
                raise HeatCollapseError(
                    f"Обратная эволюция до t={t} схлопывает компоненту {j + 1} "
                    f"(дисперсия {c.base_var + m.elapsed:.6g})",
                    component=j,
                )
            logger.info("Компонента %d схлопнулась в дирак", j + 1)
            c = HeatComponent(center=c.center, base_var=-elapsed, weight=c.weight, dirac=True)
        components.append(c)
    return HeatMixture(components=components, elapsed=elapsed)


def _check_density(m: HeatMixture) -> None:
    for j, c in enumerate(m.components):
        if c.dirac:
            raise HeatCollapseError(f"Компонента {j + 1} - дирак: плотность не определена", component=j)


def mixture_density(m: HeatMixture, x) -> np.ndarray:
    """Плотность смеси в точке или массиве точек сферы"""
    _check_density(m)
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = np.zeros(pts.shape[0])
    for c, var in zip(m.components, m.variances):
        if m.d == 2:
            out += c.weight * heat_kernel_circle(geodesic_distance(pts, c.center), var)
        else:
            out += c.weight * heat_kernel_sphere(pts @ c.center, var, m.d)
    return float(out[0]) if single else out


def mixture_density_circle(m: HeatMixture, angles) -> np.ndarray:
    """Плотность смеси на S^1 по азимутальным углам"""
    _check_density(m)
    th = np.asarray(angles, dtype=np.float64)
    out = np.zeros_like(th)
    for c, var in zip(m.components, m.variances):
        out += c.weight * heat_kernel_circle(th - angles_of(c.center), var)
    return out


def mixture_log_gradient_circle(m: HeatMixture, angles) -> np.ndarray:
    """mu'(theta) / mu(theta) для смеси на S^1"""
    _check_density(m)
    th = np.asarray(angles, dtype=np.float64)
    dens = np.zeros_like(th)
    grad = np.zeros_like(th)
    for c, var in zip(m.components, m.variances):
        offset = th - angles_of(c.center)
        dens += c.weight * heat_kernel_circle(offset, var)
        grad += c.weight * heat_kernel_circle_dtheta(offset, var)
    return grad / dens


def mixture_split_circle(m: HeatMixture, angles) -> Tuple[np.ndarray, List[Tuple[float, float]]]:
    """
    Плотность абсолютно непрерывной части смеси на S^1 и атомы (угол, вес)
    схлопнувшихся компонент
    """
    th = np.asarray(angles, dtype=np.float64)
    dens = np.zeros_like(th)
    atoms = []
    for c, var in zip(m.components, m.variances):
        if c.dirac:
            atoms.append((float(angles_of(c.center)), c.weight))
        else:
            dens += c.weight * heat_kernel_circle(th - angles_of(c.center), var)
    return dens, atoms
