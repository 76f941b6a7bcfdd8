"""Random transformations, Monte-Carlo p-values and non-parametric combination.

Plans are generated from Philox, a counter-based generator: transformation
``j`` is a pure function of ``(seed, kind, j)`` and can be regenerated on its
own via :func:`transformation_at`, so a plan is the same no matter how it is
split across workers.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, InputError, LengthMismatch

_MAX_EXHAUSTIVE = 1_000_000


class TransformKind(str, enum.Enum):
    PERMUTATION = "permutation"
    SIGN_FLIP = "sign_flip"


class Sidedness(str, enum.Enum):
    ONE = "one"
    TWO = "two"


@dataclass(frozen=True)
class Transformation:
    kind: TransformKind
    perm: np.ndarray | None = None
    signs: np.ndarray | None = None

    def __post_init__(self):
        if self.kind is TransformKind.PERMUTATION:
            if self.perm is None:
                raise InputError("permutation transformation needs perm")
            n = self.perm.shape[0]
            if not np.array_equal(np.sort(self.perm), np.arange(n)):
                raise InputError("perm is not a bijection on 0..n-1")
        else:
            if self.signs is None or not np.all(np.abs(self.signs) == 1):
                raise InputError("sign-flip transformation needs a +-1 vector")

    @property
    def n(self) -> int:
        return (self.perm if self.perm is not None else self.signs).shape[0]

    @classmethod
    def identity(cls, n: int, kind: TransformKind = TransformKind.PERMUTATION) -> "Transformation":
        if kind is TransformKind.PERMUTATION:
            return cls(kind, perm=np.arange(n))
        return cls(kind, signs=np.ones(n, dtype=np.int8))


def apply(t: Transformation, v) -> np.ndarray:
    """Transform a vector: ``out[i] = v[perm[i]]`` or ``out[i] = signs[i] * v[i]``."""
    v = np.asarray(v)
    if v.shape[0] != t.n:
        raise LengthMismatch(f"transformation has length {t.n}, vector has {v.shape[0]}")
    if t.kind is TransformKind.PERMUTATION:
        return v[t.perm]
    return t.signs * v


@dataclass(frozen=True)
class TransformationPlan:
    """``w`` transformations of ``{0..n-1}``; row 0 is always the identity.

    Permutations are stored as a (w, n) index array, sign flips as a (w, n)
    array of +-1.  ``seed`` is ``None`` for exhaustive plans.
    """

    kind: TransformKind
    seed: int | None
    table: np.ndarray = field(repr=False)

    @property
    def w(self) -> int:
        return self.table.shape[0]

    @property
    def n(self) -> int:
        return self.table.shape[1]

    def __len__(self) -> int:
        return self.w

    def __getitem__(self, j: int) -> Transformation:
        row = self.table[j]
        if self.kind is TransformKind.PERMUTATION:
            return Transformation(self.kind, perm=row)
        return Transformation(self.kind, signs=row)

    @property
    def transformations(self) -> list[Transformation]:
        return [self[j] for j in range(self.w)]

    def transform_rows(self, v: np.ndarray, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Transformed copies of ``v`` for rows ``start:stop``, shape (rows, n)."""
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.n:
            raise LengthMismatch(f"plan has length {self.n}, vector has {v.shape[0]}")
        rows = self.table[start:stop]
        if self.kind is TransformKind.PERMUTATION:
            return v[rows]
        return rows * v


def _kind(kind) -> TransformKind:
    return kind if isinstance(kind, TransformKind) else TransformKind(kind)


def _stream(seed: int, kind: TransformKind) -> np.random.Philox:
    if not 0 <= seed < 2**64:
        raise InputError(f"seed must be a 64-bit unsigned integer, got {seed}")
    word = 0 if kind is TransformKind.PERMUTATION else 1
    return np.random.Philox(key=seed, counter=[0, 0, 0, word])


def _blocks_per_row(n: int) -> int:
    # Philox emits 4 uint64 per counter step
    return -(-n // 4)


def _rows_from_raw(raw: np.ndarray, kind: TransformKind) -> np.ndarray:
    if kind is TransformKind.PERMUTATION:
        return np.argsort(raw, axis=-1, kind="stable")
    return (1 - 2 * (raw >> np.uint64(63)).astype(np.int8)).astype(np.int8)


def sample_plan(n: int, w: int, kind=TransformKind.PERMUTATION, seed: int = 0) -> TransformationPlan:
    """Identity followed by ``w - 1`` i.i.d. uniform transformations.

    A random permutation is the argsort of n i.i.d. 64-bit keys; a sign flip
    takes the top bit of each key.  Row ``j`` reads counter blocks
    ``[j*m, (j+1)*m)`` with ``m = ceil(n / 4)``.
    """
    kind = _kind(kind)
    if w < 1:
        raise InputError(f"w must be >= 1, got {w}")
    if n < 2:
        raise InputError(f"n must be >= 2, got {n}")
    m = _blocks_per_row(n)
    bitgen = _stream(int(seed), kind)
    bitgen.advance(m)
    raw = bitgen.random_raw((w - 1) * 4 * m).reshape(w - 1, 4 * m)[:, :n]
    first = Transformation.identity(n, kind)
    head = (first.perm if kind is TransformKind.PERMUTATION else first.signs)[None, :]
    table = np.vstack([head.astype(np.int64 if kind is TransformKind.PERMUTATION else np.int8),
                       _rows_from_raw(raw, kind)])
    table.setflags(write=False)
    return TransformationPlan(kind=kind, seed=int(seed), table=table)


def transformation_at(n: int, j: int, kind=TransformKind.PERMUTATION, seed: int = 0) -> Transformation:
    """Regenerate row ``j`` (0-based) of ``sample_plan(n, w, kind, seed)`` for any ``w > j``."""
    kind = _kind(kind)
    if j == 0:
        return Transformation.identity(n, kind)
    m = _blocks_per_row(n)
    bitgen = _stream(int(seed), kind)
    bitgen.advance(j * m)
    raw = bitgen.random_raw(4 * m)[:n]
    row = _rows_from_raw(raw, kind)
    if kind is TransformKind.PERMUTATION:
        return Transformation(kind, perm=row)
    return Transformation(kind, signs=row)


def exhaustive_plan(n: int, kind=TransformKind.PERMUTATION) -> TransformationPlan:
    """Every permutation (n!) or sign vector (2^n), identity first."""
    kind = _kind(kind)
    if kind is TransformKind.PERMUTATION:
        if math.factorial(n) > _MAX_EXHAUSTIVE:
            raise InputError(f"{n}! permutations is too many to enumerate")
        table = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    else:
        if 2**n > _MAX_EXHAUSTIVE:
            raise InputError(f"2^{n} sign vectors is too many to enumerate")
        table = np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.int8)
    table.setflags(write=False)
    return TransformationPlan(kind=kind, seed=None, table=table)


def p_one_sided(T) -> float:
    """Fraction of statistics at least as large as ``T[0]`` (itself included)."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 1 or T.size < 1:
        raise InputError("need a nonempty 1-d statistic vector")
    return float(np.count_nonzero(T >= T[0]) / T.size)


def p_two_sided(T) -> float:
    """Twice the smaller tail fraction around ``T[0]``, clamped to 1."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 1 or T.size < 1:
        raise InputError("need a nonempty 1-d statistic vector")
    upper = np.count_nonzero(T >= T[0])
    lower = np.count_nonzero(T <= T[0])
    return float(min(1.0, 2.0 * min(upper, lower) / T.size))


def combining_max_abs(t) -> np.ndarray | float:
    return np.max(np.abs(t), axis=-1)


def combining_mean_abs(t) -> np.ndarray | float:
    return np.mean(np.abs(t), axis=-1)


def combining_abs(t) -> np.ndarray | float:
    """Absolute value of a single coordinate; meant for d = 1."""
    return np.abs(t)[..., 0]


COMBINERS: dict[str, Callable] = {
    "max_abs": combining_max_abs,
    "mean_abs": combining_mean_abs,
    "abs": combining_abs,
}

CombiningFunction = Union[str, Callable]


def resolve_combiner(psi: CombiningFunction) -> tuple[str, Callable]:
    if callable(psi):
        return getattr(psi, "__name__", "custom"), psi
    key = str(psi).replace("-", "_")
    if key not in COMBINERS:
        raise InputError(f"unknown combining function {psi!r}; choose from {sorted(COMBINERS)}")
    return key, COMBINERS[key]


def combine_rows(stats: np.ndarray, psi: CombiningFunction) -> np.ndarray:
    name, fn = resolve_combiner(psi)
    if fn in COMBINERS.values():
        return np.asarray(fn(stats), dtype=float)
    return np.array([fn(row) for row in stats], dtype=float)


def npc_combine(stats, psi: CombiningFunction, d: int | None = None) -> float:
    """One-sided p-value of the combined statistics ``psi(row_j)``."""
    stats = np.asarray(stats, dtype=float)
    if stats.ndim == 1:
        stats = stats[:, None]
    if stats.ndim != 2 or stats.shape[0] < 1 or stats.shape[1] < 1:
        raise DimensionMismatch(f"expected a (w, d) matrix, got shape {stats.shape}")
    if d is not None and stats.shape[1] != d:
        raise DimensionMismatch(f"expected {d} columns, got {stats.shape[1]}")
    return p_one_sided(combine_rows(stats, psi))


@dataclass(frozen=True)
class TestOutcome:
    """Result of one permutation test."""

    __test__ = False  # not a pytest class

    statistics: np.ndarray
    p_value: float
    sidedness: Sidedness
    method: str
    statistic_kind: str
    plan_seed: int | None
    lam: float | None = None
    lam_x: float | None = None
    components: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sidedness", Sidedness(self.sidedness))
        object.__setattr__(self, "statistics", np.asarray(self.statistics, dtype=float))

    @property
    def w(self) -> int:
        return self.statistics.shape[0]

    @property
    def t1(self) -> float:
        return float(self.statistics[0])

    def record(self) -> dict:
        return {
            "method": self.method,
            "p": self.p_value,
            "T1": self.t1,
            "w": self.w,
            "seed": self.plan_seed,
            "lambda": self.lam,
            "lambda_x": self.lam_x,
            "statistic_kind": self.statistic_kind,
            "sidedness": self.sidedness.value,
        }


def ensure_plan(plan: TransformationPlan, n: int) -> TransformationPlan:
    if plan.n != n:
        raise LengthMismatch(f"plan has length {plan.n}, data has n = {n}")
    return plan


__all__: Sequence[str] = (
    "TransformKind", "Sidedness", "Transformation", "TransformationPlan", "TestOutcome",
    "apply", "sample_plan", "transformation_at", "exhaustive_plan", "p_one_sided",
    "p_two_sided", "npc_combine", "combining_max_abs", "combining_mean_abs", "COMBINERS",
)
