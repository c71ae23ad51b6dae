"""
Численные функции распределения фон Мизеса-Фишера.

A(beta) = I_{d/2}(beta) / I_{d/2-1}(beta) считается через экспоненциально
масштабированные функции Бесселя, поэтому не переполняется при beta до 1e6.
"""
import logging
from typing import Tuple

import numpy as np
from scipy.special import gammaln, ive, roots_jacobi

from ..core.exceptions import QuadratureError
from ..models.params import VmfParams

logger = logging.getLogger(__name__)

QUAD_REL_TOL = 1e-8
QUAD_MAX_NODES = 8192
# За пределами 60/beta от полюса подынтегральное выражение меньше e^{-60}
LAPLACE_WINDOW = 60.0


def vmf_mean_resultant(beta, d: int):
    """Средняя результирующая длина A(beta) распределения ФМФ на S^{d-1}"""
    if d < 2:
        raise ValueError("d должна быть не меньше 2")
    b = np.asarray(beta, dtype=np.float64)
    if np.any(b < 0):
        raise ValueError("beta должна быть неотрицательной")
    nu = d / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        num = ive(nu, b)
        den = ive(nu - 1.0, b)
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), b / d)
    ratio = np.where(b == 0, 0.0, ratio)
    return float(ratio) if ratio.ndim == 0 else ratio


def vmf_A_prime(beta, d: int):
    """A'(beta) = 1 - A^2 - (d-1) A / beta"""
    b = np.asarray(beta, dtype=np.float64)
    if np.any(b <= 0):
        raise ValueError("beta должна быть положительной")
    a = vmf_mean_resultant(b, d)
    out = 1.0 - a * a - (d - 1) * a / b
    return float(out) if np.ndim(out) == 0 else out


def vmf_A_doubleprime(beta, d: int):
    """A''(beta) как производная тождества A' = 1 - A^2 - (d-1)A/beta"""
    b = np.asarray(beta, dtype=np.float64)
    a = vmf_mean_resultant(b, d)
    ap = vmf_A_prime(b, d)
    out = -2.0 * a * ap - (d - 1) * ap / b + (d - 1) * a / (b * b)
    return float(out) if np.ndim(out) == 0 else out


def vmf_cumulant_coefficients(beta: float, d: int) -> Tuple[float, float]:
    """(alpha_2, beta_2) ковариации alpha_2 x x^T + beta_2 I"""
    a = vmf_mean_resultant(beta, d)
    ap = vmf_A_prime(beta, d)
    beta2 = (1.0 - ap - a * a) / (d - 1)
    return ap - beta2, beta2


def _sample_w(rng: np.random.Generator, kappa: float, d: int, n: int) -> np.ndarray:
    """Косинус угла к среднему направлению: схема отбора Вуда"""
    dim = d - 1
    if kappa == 0:
        return 1.0 - 2.0 * rng.beta(dim / 2.0, dim / 2.0, size=n)
    b = dim / (np.sqrt(4.0 * kappa**2 + dim**2) + 2.0 * kappa)
    x = (1.0 - b) / (1.0 + b)
    c = kappa * x + dim * np.log(1.0 - x * x)

    out = np.empty(n)
    filled = 0
    while filled < n:
        m = max(2 * (n - filled), 64)
        z = rng.beta(dim / 2.0, dim / 2.0, size=m)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=m)
        accepted = w[kappa * w + dim * np.log(1.0 - x * w) - c >= np.log(u)]
        take = min(accepted.size, n - filled)
        out[filled:filled + take] = accepted[:take]
        filled += take
    return out


def sample_vmf(rng: np.random.Generator, p: VmfParams, n: int = None) -> np.ndarray:
    """Выборка из плотности, пропорциональной exp(kappa <mean_dir, y>)"""
    size = 1 if n is None else n
    mu = p.mean_dir
    w = _sample_w(rng, p.kappa, p.d, size)

    v = rng.standard_normal((size, p.d))
    v -= (v @ mu)[:, None] * mu
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    samples = w[:, None] * mu + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * v
    samples /= np.linalg.norm(samples, axis=1, keepdims=True)
    return samples[0] if n is None else samples


def central_moment_tensors(samples: np.ndarray, chunk: int = 65536):
    """
    Вторые и третьи центральные моменты выборки и их стандартные ошибки.

    Возвращает (m2, se2, m3, se3); m3 имеет форму (d, d, d).
    """
    n, d = samples.shape
    mean = samples.mean(axis=0)
    s2 = np.zeros((d, d))
    q2 = np.zeros((d, d))
    s3 = np.zeros((d, d, d))
    q3 = np.zeros((d, d, d))
    for start in range(0, n, chunk):
        c = samples[start:start + chunk] - mean
        p2 = np.einsum("ni,nj->nij", c, c)
        p3 = np.einsum("nij,nk->nijk", p2, c)
        s2 += p2.sum(axis=0)
        q2 += (p2 * p2).sum(axis=0)
        s3 += p3.sum(axis=0)
        q3 += (p3 * p3).sum(axis=0)
    m2, m3 = s2 / n, s3 / n
    se2 = np.sqrt(np.maximum(q2 / n - m2 * m2, 0.0) / n)
    se3 = np.sqrt(np.maximum(q3 / n - m3 * m3, 0.0) / n)
    return m2, se2, m3, se3


def sphere_area(d: int) -> float:
    """Площадь S^{d-1}"""
    return float(2.0 * np.exp(0.5 * d * np.log(np.pi) - gammaln(0.5 * d)))


def _integral_at(k: float, beta: float, d: int, n: int) -> float:
    a = 0.5 * k + 0.5 * (d - 3)
    b = 0.5 * (d - 3)
    width = 2.0 if beta <= 0 else min(2.0, LAPLACE_WINDOW / beta)

    if width >= 2.0:
        # Вес (1 - t)^a (1 + t)^b на [-1, 1]
        t, w = roots_jacobi(n, a, b)
        return float(np.sum(w * np.exp(beta * (t - 1.0))))

    # Окно s = 1 - t в [0, width], s = width (1 - u) / 2
    u, w = roots_jacobi(n, a, 0.0)
    s = 0.5 * width * (1.0 - u)
    f = np.exp(-beta * s) * (2.0 - s) ** b
    return float((0.5 * width) ** (a + 1.0) * np.sum(w * f))


def surface_integral_estimate(k: float, beta: float, d: int, n_quad: int = 64, scaled: bool = False) -> float:
    """
    Интеграл по S^{d-1} от (1 - <x,y>)^{k/2} exp(beta <x,y>) dy.

    scaled=True возвращает значение, умноженное на exp(-beta).
    """
    if n_quad < 64:
        raise ValueError("n_quad должен быть не меньше 64")
    if k < 0 or beta < 0 or d < 2:
        raise ValueError("Ожидается k >= 0, beta >= 0, d >= 2")

    area = sphere_area(d - 1)
    n = n_quad
    prev = _integral_at(k, beta, d, n)
    while True:
        n *= 2
        if n > QUAD_MAX_NODES:
            raise QuadratureError(
                f"Квадратура не сошлась за {QUAD_MAX_NODES} узлов (k={k}, beta={beta}, d={d})"
            )
        cur = _integral_at(k, beta, d, n)
        if abs(cur - prev) <= QUAD_REL_TOL * abs(cur):
            break
        prev = cur

    value = area * cur
    return value if scaled else value * np.exp(beta)
