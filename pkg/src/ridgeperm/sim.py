"""Synthetic level/power experiments.

A :class:`Scenario` fixes the data-generating process and the list of tests;
:func:`run_scenario` repeats generate -> centre -> test ``reps`` times and
tabulates how often each test rejects at each cutoff.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .data import Dataset
from .errors import InputError, RidgePermError
from .methods import Method, MethodSpec, RidgeContext, run_method
from .perm import sample_plan

# E ~ Exp(1) has E[E^k] = k!, so E^3 has mean 6 and variance 720 - 36 = 684
_CUBED_EXP_MEAN = 6.0
_CUBED_EXP_SD = math.sqrt(684.0)


class ErrorLaw(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CUBED_EXPONENTIAL = "cubed_exponential"
    HETEROSCEDASTIC = "heteroscedastic"


class Mode(str, enum.Enum):
    LEVEL = "level"
    POWER = "power"


@dataclass(frozen=True)
class Design:
    """Covariate correlation structure.

    ``sizes is None``: one homogeneous block with pairwise correlation ``rho``.
    Otherwise independent blocks of the given sizes, each with within-block
    correlation ``rho``.
    """

    rho: float = 0.0
    sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise InputError(f"correlation must lie in [0, 1), got {self.rho}")
        if self.sizes is not None:
            object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
            if any(s < 1 for s in self.sizes):
                raise InputError("cluster sizes must be positive")

    @property
    def name(self) -> str:
        return "homogeneous" if self.sizes is None else "clusters"


def gen_covariates(n: int, p_total: int, design: Design, rng: np.random.Generator) -> np.ndarray:
    """Standard-normal covariates with equicorrelation ``rho`` inside each block.

    Each block uses the one-factor construction
    ``x_ij = sqrt(rho) * g_i + sqrt(1 - rho) * e_ij``.
    """
    sizes = (p_total,) if design.sizes is None else design.sizes
    if sum(sizes) != p_total:
        raise InputError(f"cluster sizes sum to {sum(sizes)}, expected {p_total}")
    a, b = math.sqrt(design.rho), math.sqrt(1.0 - design.rho)
    blocks = []
    for size in sizes:
        g = rng.standard_normal((n, 1))
        e = rng.standard_normal((n, size))
        blocks.append(a * g + b * e)
    return np.hstack(blocks)


def gen_errors(n: int, law: ErrorLaw, x_col: np.ndarray | None, rng: np.random.Generator) -> np.ndarray:
    """Mean-zero errors; variance 1 except HETEROSCEDASTIC, where sd_i = |x_i|."""
    law = ErrorLaw(law)
    if law is ErrorLaw.GAUSSIAN:
        return rng.standard_normal(n)
    if law is ErrorLaw.CUBED_EXPONENTIAL:
        return (rng.standard_exponential(n) ** 3 - _CUBED_EXP_MEAN) / _CUBED_EXP_SD
    if x_col is None:
        raise InputError("heteroscedastic errors need the covariate of interest")
    return np.abs(np.asarray(x_col, dtype=float)) * rng.standard_normal(n)


def _vec(values, length: int, name: str) -> np.ndarray:
    arr = np.zeros(length)
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size > length:
        raise InputError(f"{name} has {values.size} entries, expected at most {length}")
    arr[: values.size] = values
    return arr


@dataclass(frozen=True)
class Scenario:
    """Data-generating process plus the tests to run on each replicate.

    ``q`` counts the intercept, so ``q - 1`` nuisance covariates are drawn
    and ``gamma`` lists their coefficients (``gamma[0]`` belongs to the
    intercept and is always 0; shorter vectors are zero-padded).  ``beta`` is
    zero-padded to length ``d``.  ``power_beta`` is the effect used by
    :meth:`for_mode` for power runs.
    """

    n: int = 30
    d: int = 1
    q: int = 60
    beta: tuple[float, ...] = (0.0,)
    gamma: tuple[float, ...] = (0.0,)
    design: Design = field(default_factory=Design)
    error_law: ErrorLaw = ErrorLaw.GAUSSIAN
    reps: int = 1000
    w: int = 1000
    alphas: tuple[float, ...] = (0.05, 0.01, 0.001)
    methods: tuple[MethodSpec, ...] = (
        MethodSpec(Method.FLHD_PARTIAL),
        MethodSpec(Method.FLHD_SEMIPARTIAL),
        MethodSpec(Method.DOUBLE_RESID),
    )
    master_seed: int = 0
    power_beta: tuple[float, ...] | None = None
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "error_law", ErrorLaw(self.error_law))
        object.__setattr__(self, "beta", tuple(_vec(self.beta, self.d, "beta")))
        object.__setattr__(self, "gamma", tuple(_vec(self.gamma, self.q, "gamma")))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.gamma[0] != 0.0:
            raise InputError("the intercept coefficient gamma[0] must be 0")
        if self.n < 3 or self.d < 1 or self.q < 2:
            raise InputError(f"need n >= 3, d >= 1, q >= 2 (got n={self.n}, d={self.d}, q={self.q})")
        if self.reps < 1 or self.w < 1:
            raise InputError("reps and w must be positive")
        if not self.methods:
            raise InputError("scenario has no methods")
        if self.design.sizes is not None and sum(self.design.sizes) != self.p_total:
            raise InputError(
                f"cluster sizes sum to {sum(self.design.sizes)}, expected d + q - 1 = {self.p_total}"
            )

    @property
    def p_total(self) -> int:
        return self.d + self.q - 1

    @property
    def mode(self) -> Mode:
        return Mode.POWER if any(self.beta) else Mode.LEVEL

    def for_mode(self, mode) -> "Scenario":
        mode = Mode(mode)
        if mode is Mode.LEVEL:
            return replace(self, beta=(0.0,) * self.d)
        if self.power_beta is None:
            raise InputError(f"scenario {self.name!r} defines no power effect")
        return replace(self, beta=self.power_beta)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def rep_seeds(master_seed: int, rep: int) -> tuple[int, int, int]:
    """(data, plan, cv) seeds for one replicate, independent of execution order."""
    state = np.random.SeedSequence([int(master_seed), int(rep)]).generate_state(3, np.uint64)
    return int(state[0]), int(state[1]), int(state[2])


def simulate_dataset(s: Scenario, rng: np.random.Generator) -> Dataset:
    W = gen_covariates(s.n, s.p_total, s.design, rng)
    X, Z = W[:, : s.d], W[:, s.d :]
    eps = gen_errors(s.n, s.error_law, X[:, 0], rng)
    y = X @ np.asarray(s.beta) + Z @ np.asarray(s.gamma[1:]) + eps
    return Dataset.from_arrays(y, X, Z)


def run_rep(s: Scenario, rep: int) -> tuple[np.ndarray, list[str]]:
    """p-values of every method on replicate ``rep``; NaN where a method failed."""
    data_seed, plan_seed, cv_seed = rep_seeds(s.master_seed, rep)
    data = simulate_dataset(s, np.random.default_rng(data_seed))
    ctx = RidgeContext(data, s.methods[0].folds, s.methods[0].grid, cv_seed)
    plans = {}
    pvals = np.full(len(s.methods), np.nan)
    errors = []
    for i, template in enumerate(s.methods):
        spec = template.with_(w=s.w, seed=plan_seed, cv_seed=cv_seed)
        key = spec.kind
        if key not in plans:
            plans[key] = sample_plan(data.n, s.w, spec.kind, plan_seed)
        try:
            pvals[i] = run_method(data, spec, ctx=ctx, plan=plans[key]).p_value
        except RidgePermError as exc:
            errors.append(f"rep {rep}, {method_label(template)}: {exc}")
    return pvals, errors


def method_label(spec: MethodSpec) -> str:
    label = spec.method.label
    if spec.method is Method.FL_CLASSIC and spec.statistic is not None:
        label += "-" + spec.statistic.value
    return label


@dataclass(frozen=True)
class RejectionTable:
    """Rejection rates ``#{p <= alpha} / reps_ok`` per method and cutoff.

    ``rates`` and ``ses`` have shape (len(alphas), len(methods)); ``pvalues``
    keeps the raw (reps, methods) matrix with NaN for failed runs.
    """

    methods: tuple[str, ...]
    alphas: tuple[float, ...]
    rates: np.ndarray
    ses: np.ndarray
    pvalues: np.ndarray
    failures: tuple[int, ...]
    errors: tuple[str, ...]
    mode: Mode
    scenario: str = "custom"

    @property
    def reps(self) -> int:
        return self.pvalues.shape[0]

    def rate(self, method: str, alpha: float) -> float:
        return float(self.rates[self.alphas.index(alpha), self.methods.index(method)])

    def se(self, method: str, alpha: float) -> float:
        return float(self.ses[self.alphas.index(alpha), self.methods.index(method)])

    def to_tsv(self) -> str:
        header = ["alpha"]
        for m in self.methods:
            header += [m, f"{m}_se"]
        lines = ["\t".join(header)]
        for a_idx, alpha in enumerate(self.alphas):
            row = [format(alpha, ".17g")]
            for m_idx in range(len(self.methods)):
                row.append(format(float(self.rates[a_idx, m_idx]), ".17g"))
                row.append(format(float(self.ses[a_idx, m_idx]), ".17g"))
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"


def tabulate(pvalues: np.ndarray, methods, alphas, mode, errors=(), scenario="custom") -> RejectionTable:
    ok = ~np.isnan(pvalues)
    reps_ok = ok.sum(axis=0)
    rates = np.zeros((len(alphas), len(methods)))
    for a_idx, alpha in enumerate(alphas):
        hits = np.where(ok, pvalues <= alpha, False).sum(axis=0)
        rates[a_idx] = np.divide(hits, reps_ok, out=np.full(len(methods), np.nan), where=reps_ok > 0)
    ses = np.sqrt(rates * (1.0 - rates) / np.maximum(reps_ok, 1))
    return RejectionTable(
        methods=tuple(methods),
        alphas=tuple(alphas),
        rates=rates,
        ses=ses,
        pvalues=pvalues,
        failures=tuple(int(v) for v in (~ok).sum(axis=0)),
        errors=tuple(errors),
        mode=Mode(mode),
        scenario=scenario,
    )


def run_scenario(s: Scenario, n_jobs: int = 1) -> RejectionTable:
    """Run every replicate and tabulate rejection rates.

    Replicate seeds derive from ``(master_seed, rep)`` only, so the table is
    identical for any ``n_jobs``.
    """
    if n_jobs == 1:
        results = [run_rep(s, r) for r in range(s.reps)]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(run_rep)(s, r) for r in range(s.reps))
    pvalues = np.vstack([p for p, _ in results])
    errors = [e for _, errs in results for e in errs]
    labels = [method_label(m) for m in s.methods]
    return tabulate(pvalues, labels, s.alphas, s.mode, errors, s.name)
