"""Плотная линейная алгебра малой размерности: форма Шура и подпространство E_max."""
import logging
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigvals, schur

from ..core.exceptions import SchurConvergenceError
from ..models.params import Subspace

logger = logging.getLogger(__name__)

MAX_DIM = 32


def _check_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("Ожидается квадратная матрица")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"Размерность {a.shape[0]} больше допустимой {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValueError("Элементы матрицы должны быть конечными")
    return a


def _schur(a: np.ndarray, sort=None) -> Tuple[np.ndarray, np.ndarray, int]:
    try:
        if sort is None:
            t, z = schur(a, output="real")
            sdim = 0
        else:
            t, z, sdim = schur(a, output="real", sort=sort)
    except (LinAlgError, ValueError) as exc:
        raise SchurConvergenceError(f"QR-итерации не сошлись: {exc}", residual=float("nan")) from exc

    scale = max(np.linalg.norm(a), 1.0)
    residual = np.linalg.norm(z @ t @ z.T - a) / scale
    orth = np.linalg.norm(z.T @ z - np.eye(a.shape[0]))
    if residual > 1e-8 or orth > 1e-9:
        raise SchurConvergenceError("Разложение Шура неточно", residual=float(max(residual, orth)))
    return z, t, sdim


def real_schur(a) -> Tuple[np.ndarray, np.ndarray]:
    """A = Z T Z^T, Z ортогональна, T квазиверхнетреугольная"""
    a = _check_square(a)
    z, t, _ = _schur(a)
    return z, t


def default_group_tol(a: np.ndarray) -> float:
    return 1e-8 * max(np.linalg.norm(a, "fro"), np.finfo(float).tiny)


def dominant_invariant_subspace(a, group_tol: Optional[float] = None) -> Subspace:
    """
    Базис инвариантного подпространства собственных значений с максимальной
    вещественной частью (с точностью group_tol), через упорядоченную форму Шура
    """
    a = _check_square(a)
    tol = default_group_tol(a) if group_tol is None else group_tol
    if tol <= 0:
        raise ValueError("group_tol должен быть положительным")

    _, t = real_schur(a)
    max_re = float(np.max(eigvals(t).real))
    z, _, sdim = _schur(a, sort=lambda re, im: re >= max_re - tol)
    if sdim < 1:
        raise SchurConvergenceError("Упорядочивание формы Шура не выделило блок", residual=float("nan"))

    basis = z[:, :sdim].T
    logger.debug("E_max: dim=%d, max Re=%.6g", sdim, max_re)
    return Subspace(basis=basis)


def subspace_distance(x, s: Subspace) -> np.ndarray:
    """|x - P_S x| для точки или массива точек"""
    x = np.asarray(x, dtype=np.float64)
    coeffs = x @ s.basis.T
    return np.linalg.norm(x - coeffs @ s.basis, axis=-1)


def invariance_residual(a, s: Subspace) -> float:
    """max |A b - P_S A b| по базисным векторам"""
    a = np.asarray(a, dtype=np.float64)
    images = s.basis @ a.T
    return float(np.max(np.linalg.norm(images - (images @ s.basis.T) @ s.basis, axis=1)))
