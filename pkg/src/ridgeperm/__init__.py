"""Permutation tests for linear-model coefficients with low- or high-dimensional nuisance."""

from .data import Dataset
from .errors import *  # noqa: F401,F403
from .methods import (
    Method,
    MethodSpec,
    RidgeContext,
    double_residualization,
    flhd_npc,
    freedman_lane,
    freedman_lane_hd,
    kennedy,
    run_method,
)
from .perm import (
    Sidedness,
    TestOutcome,
    Transformation,
    TransformationPlan,
    TransformKind,
    apply,
    combining_max_abs,
    combining_mean_abs,
    exhaustive_plan,
    npc_combine,
    p_one_sided,
    p_two_sided,
    sample_plan,
)
from .ridge import (
    PenaltySelection,
    RidgeProjector,
    apply_hat,
    apply_residual,
    decompose_nuisance,
    select_penalty,
)
from .stats import (
    StatisticKind,
    generalized_partial_cor,
    generalized_semi_partial_cor,
    partial_cor,
    pearson,
    semi_partial_cor,
)

__version__ = "0.1.0"
