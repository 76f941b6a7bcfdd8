"""Permutation tests for one coefficient (or a block of them) in ``y = X b + Z g + e``.

All procedures share one skeleton: build w transformed copies of a residual
vector, turn each copy into a statistic, and read the p-value off the ranks of
``T_1`` among ``T_1..T_w``.  They differ only in what gets transformed and
which correlation is taken:

============  =====================================================
method        statistic ``T_j``
============  =====================================================
fl            ``rho(R P_j R y, R x)`` (or ``x`` for semi-partial)
kennedy       ``rho(P_j R y, R x)``
flhd-partial  ``rho(R_l (P_j R_l + H_l) y, R_lx x)``
flhd-semi     ``rho(R_l (P_j R_l + H_l) y, x)``
dr            ``rho((P_j R_l + H_l) y, R_lx x)``
npc           ``Psi(rho(R_l (P_j R_l + H_l) y, X[:, k]) for each k)``
============  =====================================================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np
from joblib import Parallel, delayed

from .data import Dataset
from .errors import InputError, NotLowDimensional, ZeroVariance
from .perm import (
    Sidedness,
    TestOutcome,
    TransformationPlan,
    TransformKind,
    combine_rows,
    ensure_plan,
    p_one_sided,
    p_two_sided,
    resolve_combiner,
    sample_plan,
)
from .ridge import DEFAULT_GRID, PenaltySelection, RidgeProjector, decompose_nuisance, select_penalty
from .stats import StatisticKind, checked_residual, row_pearson

# rows of the plan processed per batch; bounds memory at CHUNK * n doubles
CHUNK = 4096


class Method(str, enum.Enum):
    FL_CLASSIC = "fl"
    KENNEDY = "kennedy"
    FLHD_PARTIAL = "flhd-partial"
    FLHD_SEMIPARTIAL = "flhd-semi"
    DOUBLE_RESID = "dr"
    FLHD_NPC = "npc"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Method.FL_CLASSIC: "FL",
    Method.KENNEDY: "Kennedy",
    Method.FLHD_PARTIAL: "FLH1",
    Method.FLHD_SEMIPARTIAL: "FLH2",
    Method.DOUBLE_RESID: "DR",
    Method.FLHD_NPC: "NPC",
}

ALL_COLUMNS = None


@dataclass(frozen=True)
class MethodSpec:
    """Everything needed to run one test besides the data.

    ``lam is None`` means the outcome penalty is chosen by cross-validation on
    the unpermuted data.  A fixed ``lam`` with ``lam_x is None`` reuses ``lam``
    for the covariate side.  ``col`` picks the tested column; NPC tests all
    columns and ignores it.
    """

    method: Method = Method.FLHD_SEMIPARTIAL
    w: int = 20_000
    seed: int = 0
    kind: TransformKind = TransformKind.PERMUTATION
    lam: float | None = None
    lam_x: float | None = None
    psi: str | Callable = "max_abs"
    col: int | None = 0
    statistic: StatisticKind | None = None
    folds: int = 10
    grid: tuple[float, float, int] = DEFAULT_GRID
    cv_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "kind", TransformKind(self.kind))
        if self.w < 1:
            raise InputError(f"w must be >= 1, got {self.w}")
        if self.method is Method.FLHD_NPC:
            resolve_combiner(self.psi)
        elif self.col is None:
            raise InputError(f"{self.method.value} tests a single column; set col")
        if self.statistic is not None:
            object.__setattr__(self, "statistic", StatisticKind(self.statistic))

    @property
    def penalty_policy(self) -> str:
        return "AUTO_CV" if self.lam is None else "FIXED"

    def with_(self, **changes) -> "MethodSpec":
        return replace(self, **changes)


class RidgeContext:
    """Per-dataset cache of the nuisance SVD and cross-validated penalties.

    Several methods run on the same data can share one context, so Z is
    decomposed once and each CV target is fitted once.
    """

    def __init__(self, data: Dataset, folds: int = 10, grid=DEFAULT_GRID, cv_seed: int = 0,
                 convention: str = "glmnet"):
        self.data = data
        self.convention = convention
        self.folds = folds
        self.grid = grid
        self.cv_seed = cv_seed
        self._x_penalties: dict[int, PenaltySelection] = {}

    @cached_property
    def projector(self) -> RidgeProjector:
        return decompose_nuisance(self.data.Z)

    @cached_property
    def penalty_y(self) -> PenaltySelection:
        return select_penalty(self.data.Z, self.data.y, self.folds, self.grid, self.cv_seed, self.convention)

    def penalty_x(self, col: int) -> PenaltySelection:
        if col not in self._x_penalties:
            self._x_penalties[col] = select_penalty(
                self.data.Z, self.data.X[:, col], self.folds, self.grid, self.cv_seed, self.convention
            )
        return self._x_penalties[col]

    @classmethod
    def for_spec(cls, data: Dataset, spec: MethodSpec) -> "RidgeContext":
        cv_seed = spec.seed if spec.cv_seed is None else spec.cv_seed
        return cls(data, spec.folds, spec.grid, cv_seed)


def _penalties(ctx: RidgeContext, spec: MethodSpec, col: int | None, need_x: bool):
    lam = ctx.penalty_y.chosen if spec.lam is None else float(spec.lam)
    if not need_x:
        return lam, None
    if spec.lam_x is not None:
        return lam, float(spec.lam_x)
    if spec.lam is not None:
        return lam, float(spec.lam)
    return lam, ctx.penalty_x(col).chosen


def _map_rows(plan: TransformationPlan, block: Callable[[int, int], np.ndarray], n_jobs: int) -> np.ndarray:
    bounds = [(a, min(a + CHUNK, plan.w)) for a in range(0, plan.w, CHUNK)]
    if n_jobs == 1 or len(bounds) == 1:
        parts = [block(a, b) for a, b in bounds]
    else:
        parts = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(block)(a, b) for a, b in bounds)
    return np.concatenate(parts, axis=0)


def _column(data: Dataset, col: int) -> np.ndarray:
    if not 0 <= col < data.d:
        raise InputError(f"column index {col} out of range for d = {data.d}")
    return data.X[:, col]


def _named(data: Dataset, col: int | None, fn: Callable[[], np.ndarray]) -> np.ndarray:
    try:
        return fn()
    except ZeroVariance as exc:
        where = "one of the tested columns" if col is None else data.column_name(col)
        raise ZeroVariance(f"{exc} (tested column: {where})") from None


def _prepare(data: Dataset, spec: MethodSpec, ctx, plan):
    if ctx is None:
        ctx = RidgeContext.for_spec(data, spec)
    if plan is None:
        plan = sample_plan(data.n, spec.w, spec.kind, spec.seed)
    return ctx, ensure_plan(plan, data.n)


def _scalar_outcome(T, spec, plan, kind, lam=None, lam_x=None) -> TestOutcome:
    return TestOutcome(
        statistics=T,
        p_value=p_two_sided(T),
        sidedness=Sidedness.TWO,
        method=spec.method.value,
        statistic_kind=kind.value,
        plan_seed=plan.seed,
        lam=lam,
        lam_x=lam_x,
    )


def _require_low_dim(data: Dataset, proj: RidgeProjector) -> None:
    if data.q >= data.n:
        raise NotLowDimensional(f"q = {data.q} >= n = {data.n}; the classical methods need q < n")
    # raises SingularAtZero for a rank-deficient Z
    proj.shrinkage(0.0)


def freedman_lane(data: Dataset, spec: MethodSpec, ctx=None, plan=None, n_jobs: int = 1) -> TestOutcome:
    """Classical Freedman-Lane test with least-squares residuals.

    Uses ``R (P R + H) = R P R``.  ``spec.statistic`` selects PARTIAL (default)
    or SEMI_PARTIAL.
    """
    ctx, plan = _prepare(data, spec, ctx, plan)
    proj = ctx.projector
    _require_low_dim(data, proj)
    kind = spec.statistic or StatisticKind.PARTIAL
    if kind not in (StatisticKind.PARTIAL, StatisticKind.SEMI_PARTIAL):
        raise InputError(f"freedman_lane supports PARTIAL or SEMI_PARTIAL, not {kind.value}")
    x = _column(data, spec.col)
    target = x
    if kind is StatisticKind.PARTIAL:
        target = checked_residual(proj.residual(0.0, x), x, data.column_name(spec.col))
    ry = checked_residual(proj.residual(0.0, data.y), data.y, "outcome")

    def block(a, b):
        return row_pearson(proj.residual_rows(0.0, plan.transform_rows(ry, a, b)), target)

    T = _named(data, spec.col, lambda: _map_rows(plan, block, n_jobs))
    return _scalar_outcome(T, spec, plan, kind)


def kennedy(data: Dataset, spec: MethodSpec, ctx=None, plan=None, n_jobs: int = 1) -> TestOutcome:
    """Kennedy's test: transformed outcome residuals against covariate residuals."""
    ctx, plan = _prepare(data, spec, ctx, plan)
    proj = ctx.projector
    _require_low_dim(data, proj)
    x = _column(data, spec.col)
    rx = checked_residual(proj.residual(0.0, x), x, data.column_name(spec.col))
    ry = checked_residual(proj.residual(0.0, data.y), data.y, "outcome")

    def block(a, b):
        return row_pearson(plan.transform_rows(ry, a, b), rx)

    T = _named(data, spec.col, lambda: _map_rows(plan, block, n_jobs))
    return _scalar_outcome(T, spec, plan, StatisticKind.PARTIAL)


def _flhd_rows(proj, lam, ry, hy, plan, a, b):
    return proj.residual_rows(lam, plan.transform_rows(ry, a, b) + hy)


def freedman_lane_hd(data: Dataset, spec: MethodSpec, ctx=None, plan=None, n_jobs: int = 1) -> TestOutcome:
    """Freedman-Lane with ridge residuals; works for any q including q >= n.

    The penalty is fixed once on the unpermuted data.  FLHD_SEMIPARTIAL
    correlates the re-residualised transformed outcome with raw ``x``;
    FLHD_PARTIAL correlates it with ``R_lam_x x``.
    """
    ctx, plan = _prepare(data, spec, ctx, plan)
    if spec.method not in (Method.FLHD_PARTIAL, Method.FLHD_SEMIPARTIAL):
        raise InputError(f"freedman_lane_hd cannot run method {spec.method.value}")
    partial = spec.method is Method.FLHD_PARTIAL
    proj = ctx.projector
    x = _column(data, spec.col)
    lam, lam_x = _penalties(ctx, spec, spec.col, need_x=partial)
    ry = proj.residual(lam, data.y)
    hy = data.y - ry
    target = proj.residual(lam_x, x) if partial else x

    def block(a, b):
        return row_pearson(_flhd_rows(proj, lam, ry, hy, plan, a, b), target)

    T = _named(data, spec.col, lambda: _map_rows(plan, block, n_jobs))
    kind = StatisticKind.GENERALIZED_PARTIAL if partial else StatisticKind.GENERALIZED_SEMI_PARTIAL
    return _scalar_outcome(T, spec, plan, kind, lam, lam_x)


def double_residualization(data: Dataset, spec: MethodSpec, ctx=None, plan=None, n_jobs: int = 1) -> TestOutcome:
    """Transformed ridge residuals plus the ridge fit, against ridge covariate residuals.

    ``H_lam y`` stays in the transformed outcome and no outer ``R_lam`` is
    applied; ``T_1`` is computed from ``y`` itself.
    """
    ctx, plan = _prepare(data, spec, ctx, plan)
    proj = ctx.projector
    x = _column(data, spec.col)
    lam, lam_x = _penalties(ctx, spec, spec.col, need_x=True)
    ry = proj.residual(lam, data.y)
    hy = data.y - ry
    rx = proj.residual(lam_x, x)

    def block(a, b):
        M = plan.transform_rows(ry, a, b) + hy
        if a == 0:
            M[0] = data.y
        return row_pearson(M, rx)

    T = _named(data, spec.col, lambda: _map_rows(plan, block, n_jobs))
    return _scalar_outcome(T, spec, plan, StatisticKind.GENERALIZED_PARTIAL, lam, lam_x)


def flhd_npc(data: Dataset, spec: MethodSpec, ctx=None, plan=None, n_jobs: int = 1) -> TestOutcome:
    """Joint test of all d coefficients by combining per-column FLHD statistics.

    Each transformation is applied once; the re-residualised outcome is then
    correlated with every column of X, so the d statistics in a row share the
    same transformation.  The p-value is one-sided in ``psi``.
    """
    ctx, plan = _prepare(data, spec, ctx, plan)
    proj = ctx.projector
    lam, _ = _penalties(ctx, spec, None, need_x=False)
    ry = proj.residual(lam, data.y)
    hy = data.y - ry
    X = data.X

    def block(a, b):
        return row_pearson(_flhd_rows(proj, lam, ry, hy, plan, a, b), X)

    comps = _named(data, None, lambda: _map_rows(plan, block, n_jobs))
    psi_name, _ = resolve_combiner(spec.psi)
    combined = combine_rows(comps, spec.psi)
    return TestOutcome(
        statistics=combined,
        p_value=p_one_sided(combined),
        sidedness=Sidedness.ONE,
        method=spec.method.value,
        statistic_kind=StatisticKind.GENERALIZED_SEMI_PARTIAL.value,
        plan_seed=plan.seed,
        lam=lam,
        lam_x=None,
        components=comps,
    )


_DISPATCH = {
    Method.FL_CLASSIC: freedman_lane,
    Method.KENNEDY: kennedy,
    Method.FLHD_PARTIAL: freedman_lane_hd,
    Method.FLHD_SEMIPARTIAL: freedman_lane_hd,
    Method.DOUBLE_RESID: double_residualization,
    Method.FLHD_NPC: flhd_npc,
}


def run_method(data: Dataset, spec: MethodSpec, ctx=None, plan=None, n_jobs: int = 1) -> TestOutcome:
    return _DISPATCH[spec.method](data, spec, ctx=ctx, plan=plan, n_jobs=n_jobs)
