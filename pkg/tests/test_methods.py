import numpy as np
import pytest

import oracle
from ridgeperm.data import Dataset
from ridgeperm.errors import InputError, NotLowDimensional, ZeroVariance
from ridgeperm.methods import (
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
from ridgeperm.perm import TransformKind, exhaustive_plan, p_one_sided, sample_plan
from ridgeperm.stats import StatisticKind

LAM, LAM_X = 0.7, 1.3


@pytest.fixture(scope="module")
def six():
    """n = 6, d = 2, q = 2 fixture for exhaustive enumeration."""
    rng = np.random.default_rng(606)
    Z = rng.standard_normal((6, 2))
    X = rng.standard_normal((6, 2))
    y = 0.8 * X[:, 0] + Z @ np.array([1.0, -0.5]) + rng.standard_normal(6)
    return Dataset.from_arrays(y, X, Z)


@pytest.fixture(scope="module")
def medium():
    rng = np.random.default_rng(77)
    n = 40
    Z = rng.standard_normal((n, 5))
    X = rng.standard_normal((n, 1)) + 0.5 * Z[:, :1]
    y = 0.4 * X[:, 0] + Z @ rng.standard_normal(5) + rng.standard_normal(n)
    return Dataset.from_arrays(y, X, Z)


@pytest.fixture(scope="module")
def wide():
    rng = np.random.default_rng(88)
    n = 30
    Z = rng.standard_normal((n, 60))
    X = rng.standard_normal((n, 3))
    y = 0.5 * X[:, 0] + Z[:, 0] + Z[:, 1] + rng.standard_normal(n)
    return Dataset.from_arrays(y, X, Z)


def _fixed(method, **kw):
    lam = None if method in (Method.FL_CLASSIC, Method.KENNEDY) else LAM
    lam_x = LAM_X if method in (Method.FLHD_PARTIAL, Method.DOUBLE_RESID) else None
    col = None if method is Method.FLHD_NPC else 0
    return MethodSpec(method, lam=lam, lam_x=lam_x, col=col, **kw)


class TestBruteForce:
    @pytest.mark.parametrize("kind", [TransformKind.PERMUTATION, TransformKind.SIGN_FLIP])
    @pytest.mark.parametrize("method", list(Method))
    def test_exhaustive_matches_dense_oracle(self, six, method, kind):
        plan = exhaustive_plan(6, kind)
        spec = _fixed(method, kind=kind)
        out = run_method(six, spec, plan=plan)
        want_T = oracle.statistics(method.value, six.y, six.X, six.Z, plan.table, kind=kind.value,
                                   lam=LAM, lam_x=LAM_X)
        if method is Method.FLHD_NPC:
            np.testing.assert_allclose(out.components, want_T, atol=1e-10)
        else:
            np.testing.assert_allclose(out.statistics, want_T, atol=1e-10)
        want_p = oracle.p_value(method.value, six.y, six.X, six.Z, plan.table, kind=kind.value,
                                lam=LAM, lam_x=LAM_X)
        assert out.p_value == pytest.approx(want_p, abs=1e-8)

    def test_semi_partial_fl_matches_oracle(self, six):
        plan = exhaustive_plan(6)
        out = freedman_lane(six, MethodSpec(Method.FL_CLASSIC, statistic=StatisticKind.SEMI_PARTIAL), plan=plan)
        want = oracle.p_value("fl", six.y, six.X, six.Z, plan.table, statistic="semi")
        assert out.p_value == pytest.approx(want, abs=1e-8)


class TestIdentities:
    @pytest.mark.parametrize("method", list(Method))
    def test_identity_only_plan(self, medium, method):
        out = run_method(medium, _fixed(method, w=1))
        assert out.p_value == 1.0 and out.w == 1

    def test_fl_partial_equals_semi_partial(self, medium):
        plan = sample_plan(medium.n, 2000, seed=5)
        a = freedman_lane(medium, MethodSpec(Method.FL_CLASSIC, statistic=StatisticKind.PARTIAL), plan=plan)
        b = freedman_lane(medium, MethodSpec(Method.FL_CLASSIC, statistic=StatisticKind.SEMI_PARTIAL), plan=plan)
        assert a.p_value == pytest.approx(b.p_value, abs=1e-8)
        # statistics differ by a constant positive factor
        ratio = a.statistics / b.statistics
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-10)

    @pytest.mark.parametrize("method,stat", [
        (Method.FLHD_PARTIAL, StatisticKind.PARTIAL),
        (Method.FLHD_SEMIPARTIAL, StatisticKind.SEMI_PARTIAL),
    ])
    def test_flhd_tiny_penalty_equals_fl(self, medium, method, stat):
        plan = sample_plan(medium.n, 2000, seed=6)
        hd = freedman_lane_hd(medium, MethodSpec(method, lam=1e-12, lam_x=1e-12), plan=plan)
        fl = freedman_lane(medium, MethodSpec(Method.FL_CLASSIC, statistic=stat), plan=plan)
        assert hd.p_value == pytest.approx(fl.p_value, abs=1e-8)
        np.testing.assert_allclose(hd.statistics, fl.statistics, atol=1e-8)

    def test_kennedy_first_statistic_is_fl_partial(self, medium):
        plan = sample_plan(medium.n, 10, seed=1)
        k = kennedy(medium, MethodSpec(Method.KENNEDY), plan=plan)
        f = freedman_lane(medium, MethodSpec(Method.FL_CLASSIC), plan=plan)
        assert k.t1 == pytest.approx(f.t1, abs=1e-12)

    def test_dr_first_statistic_uses_raw_outcome(self, wide):
        out = double_residualization(wide, _fixed(Method.DOUBLE_RESID, w=10))
        rx = oracle.resid(wide.Z, LAM_X) @ wide.X[:, 0]
        assert out.t1 == pytest.approx(oracle.cor(wide.y, rx), abs=1e-12)

    def test_dr_zero_penalty_shares_kennedy_numerator(self, medium):
        # at lambda = 0 the covariances agree exactly; only the outcome scale
        # |P R y + H y| varies with j, so p-values agree only asymptotically
        plan = sample_plan(medium.n, 200, seed=4)
        dr = double_residualization(medium, MethodSpec(Method.DOUBLE_RESID, lam=0.0, lam_x=0.0), plan=plan)
        kn = kennedy(medium, MethodSpec(Method.KENNEDY), plan=plan)
        R = oracle.resid(medium.Z, 0.0)
        ry, hy = R @ medium.y, medium.y - R @ medium.y
        moved = plan.transform_rows(ry)
        scale_dr = np.linalg.norm(moved + hy - (moved + hy).mean(axis=1, keepdims=True), axis=1)
        scale_k = np.linalg.norm(moved - moved.mean(axis=1, keepdims=True), axis=1)
        np.testing.assert_allclose(dr.statistics * scale_dr, kn.statistics * scale_k, atol=1e-10)

    def test_hd_variants_differ(self, wide):
        plan = sample_plan(wide.n, 2000, seed=3)
        a = freedman_lane_hd(wide, MethodSpec(Method.FLHD_PARTIAL, lam=5.0, lam_x=5.0), plan=plan)
        b = freedman_lane_hd(wide, MethodSpec(Method.FLHD_SEMIPARTIAL, lam=5.0), plan=plan)
        assert a.p_value != b.p_value

    def test_npc_single_column_reduces_to_scalar(self, medium):
        plan = sample_plan(medium.n, 3000, seed=8)
        scalar = freedman_lane_hd(medium, MethodSpec(Method.FLHD_SEMIPARTIAL, lam=2.0), plan=plan)
        joint = flhd_npc(medium, MethodSpec(Method.FLHD_NPC, lam=2.0, psi="abs", col=None), plan=plan)
        np.testing.assert_allclose(joint.components[:, 0], scalar.statistics, atol=1e-14)
        assert joint.p_value == p_one_sided(np.abs(scalar.statistics))

    def test_npc_identical_columns(self, medium):
        x = medium.X[:, 0]
        dup = Dataset(y=medium.y, X=np.column_stack([x, x, x]), Z=medium.Z)
        plan = sample_plan(medium.n, 1000, seed=9)
        joint = flhd_npc(dup, MethodSpec(Method.FLHD_NPC, lam=2.0, col=None), plan=plan)
        np.testing.assert_array_equal(joint.components[:, 0], joint.components[:, 2])
        single = flhd_npc(medium, MethodSpec(Method.FLHD_NPC, lam=2.0, col=None), plan=plan)
        assert joint.p_value == single.p_value

    def test_npc_uses_every_column(self, wide):
        out = flhd_npc(wide, MethodSpec(Method.FLHD_NPC, w=200, col=None))
        assert out.components.shape == (200, 3)
        assert out.sidedness.value == "one"


class TestPenalties:
    def test_fixed_penalty_reused_for_covariate(self, wide):
        out = double_residualization(wide, MethodSpec(Method.DOUBLE_RESID, w=50, lam=5.0))
        assert out.lam == 5.0 and out.lam_x == 5.0

    def test_auto_penalties_from_cv(self, wide):
        spec = MethodSpec(Method.DOUBLE_RESID, w=50, seed=2, cv_seed=4)
        ctx = RidgeContext(wide, cv_seed=4)
        out = double_residualization(wide, spec, ctx=ctx)
        assert out.lam == ctx.penalty_y.chosen
        assert out.lam_x == ctx.penalty_x(0).chosen

    def test_context_matches_fresh_run(self, wide):
        spec = MethodSpec(Method.FLHD_PARTIAL, w=300, seed=1, cv_seed=3)
        a = freedman_lane_hd(wide, spec)
        b = freedman_lane_hd(wide, spec, ctx=RidgeContext(wide, cv_seed=3))
        assert a.p_value == b.p_value and a.lam == b.lam and a.lam_x == b.lam_x


class TestBehaviour:
    def test_deterministic(self, wide):
        spec = MethodSpec(Method.FLHD_SEMIPARTIAL, w=500, seed=12)
        a, b = run_method(wide, spec), run_method(wide, spec)
        np.testing.assert_array_equal(a.statistics, b.statistics)
        assert a.record() == b.record()

    def test_threads_do_not_change_result(self, wide, monkeypatch):
        import ridgeperm.methods as m

        monkeypatch.setattr(m, "CHUNK", 64)
        spec = MethodSpec(Method.DOUBLE_RESID, w=500, seed=12)
        a = run_method(wide, spec, n_jobs=1)
        b = run_method(wide, spec, n_jobs=3)
        np.testing.assert_array_equal(a.statistics, b.statistics)

    def test_two_sided_range(self, wide):
        out = run_method(wide, MethodSpec(Method.FLHD_SEMIPARTIAL, w=1000, seed=7))
        assert 2 / 1000 <= out.p_value <= 1.0

    def test_strong_effect_detected(self):
        rng = np.random.default_rng(0)
        n = 40
        Z = rng.standard_normal((n, 80))
        x = rng.standard_normal(n)
        y = 2.0 * x + Z[:, 0] + 0.5 * rng.standard_normal(n)
        data = Dataset.from_arrays(y, x, Z)
        for method in (Method.FLHD_PARTIAL, Method.FLHD_SEMIPARTIAL, Method.DOUBLE_RESID):
            assert run_method(data, MethodSpec(method, w=1000)).p_value <= 0.01

    def test_classical_need_low_dimension(self, wide):
        with pytest.raises(NotLowDimensional):
            freedman_lane(wide, MethodSpec(Method.FL_CLASSIC, w=10))
        with pytest.raises(NotLowDimensional):
            kennedy(wide, MethodSpec(Method.KENNEDY, w=10))

    def test_constant_column_names_itself(self, medium):
        data = Dataset(y=medium.y, X=np.zeros((medium.n, 1)), Z=medium.Z, x_names=("flat",))
        with pytest.raises(ZeroVariance, match="flat"):
            run_method(data, MethodSpec(Method.FLHD_SEMIPARTIAL, w=10, lam=1.0))
        with pytest.raises(ZeroVariance, match="flat"):
            run_method(data, MethodSpec(Method.FL_CLASSIC, w=10))

    def test_bad_column(self, medium):
        with pytest.raises(InputError):
            run_method(medium, MethodSpec(Method.DOUBLE_RESID, w=10, lam=1.0, col=3))

    def test_scalar_method_requires_column(self):
        with pytest.raises(InputError):
            MethodSpec(Method.DOUBLE_RESID, col=None)
