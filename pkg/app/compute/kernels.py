"""
Ядра O(N^2) взаимодействия токенов.

Параллельность только по целевому индексу i; сумма по j внутри строки
последовательна, поэтому результат не зависит от числа потоков. Источники
упорядочиваются лексикографически, что делает поле точно эквивариантным
относительно перестановок частиц.
"""
import numpy as np
from numba import njit, prange


def canonical_order(points: np.ndarray) -> np.ndarray:
    """Лексикографический порядок строк (первая координата - старший ключ)"""
    return np.lexsort(points.T[::-1])


@njit(parallel=True, cache=True)
def _apply(points, mat):
    # out_i = mat x_i, последовательная сумма по координатам
    n, d = points.shape
    out = np.empty((n, mat.shape[0]))
    for i in prange(n):
        for r in range(mat.shape[0]):
            s = 0.0
            for k in range(d):
                s += mat[r, k] * points[i, k]
            out[i, r] = s
    return out


@njit(parallel=True, cache=True)
def _softmax_average(qx, kx, vx, beta):
    m, d = qx.shape
    n = kx.shape[0]
    out = np.empty((m, d))
    for i in prange(m):
        top = -np.inf
        for j in range(n):
            s = 0.0
            for k in range(d):
                s += qx[i, k] * kx[j, k]
            if s > top:
                top = s
        z = 0.0
        acc = np.zeros(d)
        for j in range(n):
            s = 0.0
            for k in range(d):
                s += qx[i, k] * kx[j, k]
            w = np.exp(beta * (s - top))
            z += w
            for k in range(d):
                acc[k] += w * vx[j, k]
        for k in range(d):
            out[i, k] = acc[k] / z
    return out


@njit(parallel=True, cache=True)
def _logit_row_max(qx, kx):
    m, d = qx.shape
    n = kx.shape[0]
    out = np.empty(m)
    for i in prange(m):
        top = -np.inf
        for j in range(n):
            s = 0.0
            for k in range(d):
                s += qx[i, k] * kx[j, k]
            if s > top:
                top = s
        out[i] = top
    return out


@njit(parallel=True, cache=True)
def _shifted_exp_row_sums(qx, kx, beta, shift):
    m, d = qx.shape
    n = kx.shape[0]
    out = np.empty(m)
    for i in prange(m):
        z = 0.0
        for j in range(n):
            s = 0.0
            for k in range(d):
                s += qx[i, k] * kx[j, k]
            z += np.exp(beta * (s - shift))
        out[i] = z
    return out


def softmax_average(targets: np.ndarray, sources: np.ndarray, Q: np.ndarray, K: np.ndarray,
                    V: np.ndarray, beta: float) -> np.ndarray:
    """
    Для каждой цели x_i: sum_j softmax_j(beta <Q x_i, K y_j>) V y_j (без проекции)
    """
    order = canonical_order(sources)
    src = np.ascontiguousarray(sources[order])
    qx = _apply(np.ascontiguousarray(targets), np.ascontiguousarray(Q))
    kx = _apply(src, np.ascontiguousarray(K))
    vx = _apply(src, np.ascontiguousarray(V))
    return _softmax_average(qx, kx, vx, float(beta))


def shifted_energy_sum(points: np.ndarray, Q: np.ndarray, K: np.ndarray, beta: float):
    """
    (sum_{i,j} exp(beta(<Q x_i, K x_j> - M)), M) с M = max_{i,j} <Q x_i, K x_j>
    """
    order = canonical_order(points)
    pts = np.ascontiguousarray(points[order])
    qx = _apply(pts, np.ascontiguousarray(Q))
    kx = _apply(pts, np.ascontiguousarray(K))
    shift = float(np.max(_logit_row_max(qx, kx)))
    rows = _shifted_exp_row_sums(qx, kx, float(beta), shift)
    total = 0.0
    for r in rows:
        total += r
    return total, shift
