"""Correlation-type statistics used inside the permutation tests."""

from __future__ import annotations

import enum
import math

import numpy as np

from .data import Dataset
from .errors import InputError, NotLowDimensional, ZeroVariance
from .ridge import RidgeProjector, decompose_nuisance

# above this length the scalar kernel switches to compensated summation
_FSUM_THRESHOLD = 10_000
# a least-squares residual this small relative to its input is rounding noise
_RESIDUAL_RTOL = 1e-10


class StatisticKind(str, enum.Enum):
    PARTIAL = "partial"
    SEMI_PARTIAL = "semi_partial"
    GENERALIZED_PARTIAL = "generalized_partial"
    GENERALIZED_SEMI_PARTIAL = "generalized_semi_partial"
    PLAIN_PEARSON = "plain_pearson"


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape[0] > _FSUM_THRESHOLD:
        return math.fsum(a * b)
    return float(a @ b)


def pearson(u, v) -> float:
    """Sample Pearson correlation, centring both arguments explicitly."""
    u = np.asarray(u, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if u.shape != v.shape:
        raise InputError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    if u.shape[0] < 3:
        raise InputError("pearson needs at least 3 observations")
    uc = u - u.mean()
    vc = v - v.mean()
    suu = _dot(uc, uc)
    svv = _dot(vc, vc)
    if suu == 0.0 or svv == 0.0:
        raise ZeroVariance("correlation argument has zero variance")
    r = _dot(uc, vc) / math.sqrt(suu * svv)
    return min(1.0, max(-1.0, r))


def row_pearson(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Pearson correlation of each row of ``M`` (w, n) with ``v`` (n,).

    ``v`` may also be (n, d); the result is then (w, d).
    """
    Mc = M - M.mean(axis=1, keepdims=True)
    vc = v - v.mean(axis=0)
    row_ss = np.einsum("ij,ij->i", Mc, Mc)
    v_ss = np.sum(vc * vc, axis=0)
    if np.any(row_ss == 0.0) or np.any(v_ss == 0.0):
        raise ZeroVariance("correlation argument has zero variance")
    num = Mc @ vc
    if vc.ndim == 1:
        return num / np.sqrt(row_ss * v_ss)
    return num / np.sqrt(row_ss[:, None] * v_ss[None, :])


def checked_residual(r: np.ndarray, v: np.ndarray, what: str = "vector") -> np.ndarray:
    """Return ``r`` unless it is rounding noise, i.e. ``v`` lies in the span of Z."""
    scale = float(np.linalg.norm(v))
    if float(np.linalg.norm(r)) <= _RESIDUAL_RTOL * scale or scale == 0.0:
        raise ZeroVariance(f"{what} lies in the span of the nuisance columns; its residual is zero")
    return r


def _ols_projector(data: Dataset) -> RidgeProjector:
    if data.q >= data.n:
        raise NotLowDimensional(f"q = {data.q} >= n = {data.n}; use a ridge-based statistic")
    return decompose_nuisance(data.Z)


def partial_cor(data: Dataset, col: int) -> float:
    """``rho(R y, R x)`` with R the least-squares residual maker of Z."""
    proj = _ols_projector(data)
    x = data.X[:, col]
    ry = checked_residual(proj.residual(0.0, data.y), data.y, "outcome")
    rx = checked_residual(proj.residual(0.0, x), x, data.column_name(col))
    return pearson(ry, rx)


def semi_partial_cor(data: Dataset, col: int) -> float:
    """``rho(R y, x)``: outcome residualised, covariate left raw."""
    proj = _ols_projector(data)
    ry = checked_residual(proj.residual(0.0, data.y), data.y, "outcome")
    return pearson(ry, data.X[:, col])


def generalized_partial_cor(ry, rx) -> float:
    """Correlation of a ridge outcome residual with a ridge covariate residual."""
    return pearson(ry, rx)


def generalized_semi_partial_cor(ry, x) -> float:
    """Correlation of a ridge outcome residual with the raw covariate."""
    return pearson(ry, x)
