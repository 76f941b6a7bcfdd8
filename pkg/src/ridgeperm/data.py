"""The :class:`Dataset` container and its preprocessing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NonFinite


@dataclass(frozen=True)
class Dataset:
    """Outcome ``y`` (n,), covariates of interest ``X`` (n, d), nuisance ``Z`` (n, q).

    Use :meth:`from_arrays` to build one; it validates shapes, rejects
    non-finite entries and centres every column.
    """

    y: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    x_names: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Z.shape[1]

    def column_name(self, col: int) -> str:
        if col < len(self.x_names):
            return self.x_names[col]
        return f"X[:, {col}]"

    @classmethod
    def from_arrays(
        cls,
        y,
        X,
        Z,
        *,
        center: bool = True,
        standardize: bool = False,
        x_names=(),
    ) -> "Dataset":
        y = np.asarray(y, dtype=float).reshape(-1)
        X = np.asarray(X, dtype=float)
        Z = np.asarray(Z, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if Z.ndim == 1:
            Z = Z[:, None]
        n = y.shape[0]
        if X.ndim != 2 or Z.ndim != 2:
            raise InputError("X and Z must be 2-d arrays")
        if X.shape[0] != n or Z.shape[0] != n:
            raise InputError(
                f"row counts differ: y has {n}, X has {X.shape[0]}, Z has {Z.shape[0]}"
            )
        if X.shape[1] < 1 or Z.shape[1] < 1:
            raise InputError("need at least one covariate of interest and one nuisance column")
        for name, arr in (("y", y), ("X", X), ("Z", Z)):
            if not np.all(np.isfinite(arr)):
                raise NonFinite(f"{name} contains NaN or infinite values")
        if center or standardize:
            y = y - y.mean()
            X = X - X.mean(axis=0)
            Z = Z - Z.mean(axis=0)
        if standardize:
            X = _unit_sd(X)
            Z = _unit_sd(Z)
        return cls(y=y, X=X, Z=Z, x_names=tuple(x_names))

    def with_outcome(self, y: np.ndarray) -> "Dataset":
        """Same design, different (already centred) outcome."""
        return Dataset(y=np.asarray(y, dtype=float), X=self.X, Z=self.Z, x_names=self.x_names)


def _unit_sd(A: np.ndarray) -> np.ndarray:
    sd = A.std(axis=0, ddof=1)
    # constant columns stay at zero rather than becoming NaN
    sd[sd == 0] = 1.0
    return A / sd
