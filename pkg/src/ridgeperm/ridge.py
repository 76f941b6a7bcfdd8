"""Ridge hat/residual operators built from one thin SVD of the nuisance matrix.

With ``Z = U diag(s) V'`` the ridge hat matrix is

    H_lam = Z (Z'Z + lam I)^-1 Z' = U diag(s^2 / (s^2 + lam)) U'

so a single decomposition serves every penalty, and applying ``H_lam`` to a
vector costs two thin matrix products instead of an ``n x n`` solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllZeroNuisance, DegenerateFolds, InputError, SingularAtZero

DEFAULT_GRID = (1e-5, 1e5, 100)


def _rank_cutoff(s: np.ndarray, shape: tuple[int, int]) -> float:
    if s.size == 0:
        return 0.0
    return 1e-12 * max(shape) * s[0]


@dataclass(frozen=True)
class RidgeProjector:
    """Thin-SVD representation of ``H_lam`` and ``R_lam = I - H_lam`` for any ``lam``.

    ``U`` is n x r with orthonormal columns, ``s`` holds the r retained singular
    values in decreasing order, and ``q`` is the column count of the original Z.
    """

    U: np.ndarray
    s: np.ndarray
    q: int

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def rank(self) -> int:
        return self.s.shape[0]

    def shrinkage(self, lam: float) -> np.ndarray:
        """Eigenvalues ``s_i^2 / (s_i^2 + lam)`` of the ridge hat matrix."""
        lam = float(lam)
        if lam < 0:
            raise InputError(f"penalty must be nonnegative, got {lam}")
        if lam == 0.0:
            if not (self.rank == self.q < self.n):
                raise SingularAtZero(
                    f"lambda = 0 needs a full-rank Z with q < n (n={self.n}, q={self.q}, rank={self.rank})"
                )
            return np.ones_like(self.s)
        s2 = self.s**2
        return s2 / (s2 + lam)

    def hat(self, lam: float, v: np.ndarray) -> np.ndarray:
        """``H_lam v`` for a vector or an (n, k) matrix of column vectors."""
        f = self.shrinkage(lam)
        v = np.asarray(v, dtype=float)
        coef = self.U.T @ v
        if v.ndim == 1:
            return self.U @ (f * coef)
        return self.U @ (f[:, None] * coef)

    def residual(self, lam: float, v: np.ndarray) -> np.ndarray:
        """``R_lam v = v - H_lam v``."""
        v = np.asarray(v, dtype=float)
        return v - self.hat(lam, v)

    def hat_rows(self, lam: float, M: np.ndarray) -> np.ndarray:
        """Apply ``H_lam`` to every row of a (w, n) matrix."""
        f = self.shrinkage(lam)
        return ((M @ self.U) * f) @ self.U.T

    def residual_rows(self, lam: float, M: np.ndarray) -> np.ndarray:
        """Apply ``R_lam`` to every row of a (w, n) matrix."""
        return M - self.hat_rows(lam, M)

    def dense_hat(self, lam: float) -> np.ndarray:
        f = self.shrinkage(lam)
        return (self.U * f) @ self.U.T


def decompose_nuisance(Z: np.ndarray) -> RidgeProjector:
    """Thin SVD of ``Z`` truncated at ``1e-12 * max(n, q) * s_max``."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    U, s, _ = np.linalg.svd(Z, full_matrices=False)
    cutoff = _rank_cutoff(s, Z.shape)
    keep = s > cutoff
    if not np.any(keep) or s[0] == 0.0:
        raise AllZeroNuisance("nuisance matrix has no singular value above tolerance")
    return RidgeProjector(U=U[:, keep].copy(), s=s[keep].copy(), q=Z.shape[1])


def apply_hat(proj: RidgeProjector, lam: float, v: np.ndarray) -> np.ndarray:
    return proj.hat(lam, v)


def apply_residual(proj: RidgeProjector, lam: float, v: np.ndarray) -> np.ndarray:
    return proj.residual(lam, v)


@dataclass(frozen=True)
class PenaltySelection:
    """Outcome of K-fold cross-validation over a log-spaced penalty grid.

    ``grid`` and ``cv_errors`` are in per-observation units; ``chosen`` is the
    minimising grid value multiplied by n, ready for :class:`RidgeProjector`.
    ``fold_assignment`` uses fold labels 1..K.
    """

    grid: np.ndarray
    fold_assignment: np.ndarray
    cv_errors: np.ndarray
    chosen: float
    seed: int

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.cv_errors))


def assign_folds(n: int, folds: int, seed: int) -> np.ndarray:
    """Shuffle ``range(n)`` with ``seed`` and cut it into ``folds`` near-equal blocks."""
    if folds < 2:
        raise InputError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise DegenerateFolds(f"cannot split {n} observations into {folds} nonempty folds")
    order = np.random.default_rng(seed).permutation(n)
    labels = np.empty(n, dtype=np.int64)
    for k, block in enumerate(np.array_split(order, folds), start=1):
        labels[block] = k
    return labels


def penalty_grid(lo: float, hi: float, count: int) -> np.ndarray:
    if not (0 < lo < hi) or count < 1:
        raise InputError(f"invalid penalty grid ({lo}, {hi}, {count})")
    return np.logspace(np.log10(lo), np.log10(hi), int(count))


def select_penalty(
    Z: np.ndarray,
    target: np.ndarray,
    folds: int = 10,
    grid_spec: tuple[float, float, int] = DEFAULT_GRID,
    seed: int = 0,
    convention: str = "glmnet",
) -> PenaltySelection:
    """Choose the ridge penalty for regressing ``target`` on ``Z`` by K-fold CV.

    Every training fit includes an intercept.  Grid values ``g`` are read in
    one of two parametrisations:

    ``"glmnet"`` (default)
        ``(1/2m) RSS + (g/2) |b|^2`` fitted after scaling the training
        columns and target to unit (1/m) standard deviation, with ``g``
        divided by the target's sd.  This reproduces ``cv.glmnet(alpha=0)``.
    ``"plain"``
        ``RSS + m * g * |b|^2`` on centred, unscaled columns.

    (``m`` is the training-fold size.)  The error for ``g`` is the average over
    folds of the held-out mean squared error.  ``chosen`` is ``n * g_best``;
    ties go to the smallest ``g``.
    """
    if convention not in ("glmnet", "plain"):
        raise InputError(f"unknown penalty convention {convention!r}")
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    t = np.asarray(target, dtype=float).reshape(-1)
    n = Z.shape[0]
    if t.shape[0] != n:
        raise InputError("target length does not match Z")
    grid = penalty_grid(*grid_spec)
    labels = assign_folds(n, folds, seed)

    errors = np.zeros((folds, grid.size))
    for k in range(1, folds + 1):
        test = labels == k
        train = ~test
        if not test.any() or not train.any():
            raise DegenerateFolds(f"fold {k} is empty")
        Ztr, ttr = Z[train], t[train]
        m = train.sum()
        zbar, tbar = Ztr.mean(axis=0), ttr.mean()
        zscale = np.ones(Z.shape[1])
        lam = m * grid
        if convention == "glmnet":
            zscale = Ztr.std(axis=0)
            zscale[zscale == 0] = 1.0
            tsd = ttr.std()
            if tsd > 0:
                lam = lam / tsd
        U, s, Vt = np.linalg.svd((Ztr - zbar) / zscale, full_matrices=False)
        keep = s > _rank_cutoff(s, Ztr.shape)
        U, s, Vt = U[:, keep], s[keep], Vt[keep]
        b = U.T @ (ttr - tbar)
        A = ((Z[test] - zbar) / zscale) @ Vt.T
        # coefficient weights s / (s^2 + lam), one column per candidate
        weights = s[:, None] / (s[:, None] ** 2 + lam[None, :])
        pred = tbar + A @ (weights * b[:, None])
        errors[k - 1] = np.mean((t[test][:, None] - pred) ** 2, axis=0)

    cv_errors = errors.mean(axis=0)
    best = int(np.argmin(cv_errors))
    return PenaltySelection(
        grid=grid,
        fold_assignment=labels,
        cv_errors=cv_errors,
        chosen=float(n * grid[best]),
        seed=int(seed),
    )
