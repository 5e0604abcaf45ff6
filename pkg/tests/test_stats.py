import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from condgof import stats as st
from condgof.datasets import load_fixture
from condgof.errors import DegenerateSampleError, UndefinedStatisticError
from condgof.stats import Statistic

import oracles

samples = hst.lists(hst.integers(0, 25), min_size=1, max_size=40).filter(lambda x: sum(x) > 0)


class TestAgainstOracle:
    @given(samples)
    @settings(max_examples=150, deadline=None)
    def test_every_statistic(self, x):
        got = st.evaluate(x, st.ALL_STATISTICS)
        for stat in st.ALL_STATISTICS:
            want = oracles.ORACLE_STATS[stat.value](x)
            assert got[stat][0] == pytest.approx(want, rel=1e-9, abs=1e-9), stat

    def test_batch_equals_rows(self):
        rng = np.random.default_rng(0)
        from condgof.conditional import sample_conditional_geometric

        X = sample_conditional_geometric(9, 30, rng, size=50)
        batch = st.evaluate(X)
        for i in range(0, 50, 7):
            single = st.evaluate(X[i])
            for stat in st.ALL_STATISTICS:
                assert batch[stat][i] == pytest.approx(single[stat][0], rel=1e-12)

    def test_overdispersed_observed_values(self):
        x = load_fixture("betageo_n100")
        got = st.evaluate(x)
        assert got[Statistic.W2][0] == pytest.approx(0.31863, abs=5e-5)
        assert got[Statistic.A2][0] == pytest.approx(1.65711, abs=5e-5)
        assert got[Statistic.KS][0] == pytest.approx(7.65283, abs=5e-5)
        assert got[Statistic.CR][0] == pytest.approx(-116.854, abs=5e-3)
        assert got[Statistic.SB][0] == pytest.approx(3.5152, abs=5e-4)
        assert got[Statistic.SWU][0] == pytest.approx(-23.942, abs=5e-3)


class TestIdentities:
    @given(samples)
    def test_cr_is_sw_at_zero(self, x):
        # SW with the (1 - p) factor set to one is -CR
        direct = sum(oracles._xlogx(v + 1) - oracles._xlogx(v) for v in x)
        assert st.cr(x) == pytest.approx(-direct, abs=1e-9)

    @given(samples)
    def test_sign_relations(self, x):
        v = st.evaluate(x)
        assert v[Statistic.SB0][0] == max(0.0, v[Statistic.SB][0])
        assert v[Statistic.SWL][0] == -v[Statistic.SWU][0]
        assert v[Statistic.SW_ABS][0] == abs(v[Statistic.SWU][0])
        theta = v[Statistic.THETA][0]
        if not math.isnan(theta):
            exact = oracles.sb_exact(x)
            assert np.sign(theta) == np.sign(float(exact))

    @given(samples, hst.randoms(use_true_random=False))
    def test_permutation_invariant(self, x, rnd):
        y = list(x)
        rnd.shuffle(y)
        a, b = st.evaluate(x), st.evaluate(y)
        for stat in st.ALL_STATISTICS:
            assert np.array_equal(a[stat], b[stat], equal_nan=True)

    def test_sb_exact_integer_arithmetic(self):
        x = [3, 0, 0, 7, 1]
        assert st.sb(x) == float(oracles.sb_exact(x))

    def test_score_mean_zero(self):
        rng = np.random.default_rng(12)
        pi, n = 0.4, 20
        x = rng.geometric(pi, size=(4000, n)) - 1
        scores = np.array([st.score_known_param(row, pi) for row in x])
        se = scores.std() / math.sqrt(scores.size)
        assert abs(scores.mean()) < 4 * se

    def test_score_formula(self):
        x = [0, 2, 5]
        pi = 0.3
        assert st.score_known_param(x, pi) == pytest.approx((0.3 * 29 - 1.7 * 7) / 1.4)


class TestSummary:
    def test_grouped_summary_arrays(self):
        g = st.grouped_summary([0, 0, 1, 3])
        assert g.n == 4 and g.t == 4 and g.p_hat == 0.5
        assert g.observed[:4].tolist() == [2, 1, 0, 1]
        assert g.m0_upper == 3
        assert g.m1_upper >= g.m0_upper
        np.testing.assert_allclose(g.cum_probs, 1 - 0.5 ** (np.arange(g.observed.size) + 1))
        np.testing.assert_allclose(g.deviations, g.cum_observed - g.cum_expected)

    def test_upper_bound_scan(self):
        for n in (1, 5, 28, 100):
            for p in (0.05, 0.2, 0.5, 0.9, 0.99):
                assert st._upper_fit_bound(n, p) == oracles._fit_bound(n, p)

    def test_edf_wrappers(self):
        x = [0, 1, 1, 4, 9]
        g = st.grouped_summary(x)
        assert st.w2(g) == pytest.approx(oracles.w2(x))
        assert st.a2(g) == pytest.approx(oracles.a2(x))
        assert st.ks(g) == pytest.approx(oracles.ks(x))


class TestEdgeCases:
    def test_zero_total(self):
        with pytest.raises(DegenerateSampleError):
            st.evaluate([0, 0, 0])
        assert st.cr([0, 0]) == 0.0

    def test_single_observation(self):
        v = st.evaluate([5])
        assert v[Statistic.SB][0] == 25 - 5 - 2 * 25

    def test_theta_nan_raises(self, monkeypatch):
        monkeypatch.setattr(st, "_one", lambda x, stat: math.nan)
        with pytest.raises(UndefinedStatisticError):
            st.theta_tilde_stat([1, 2])

    def test_mixed_totals_rejected(self):
        with pytest.raises(ValueError):
            st.evaluate(np.array([[1, 2], [0, 1]]))

    def test_parse_statistics(self):
        assert st.parse_statistics("all") == st.ALL_STATISTICS
        assert st.parse_statistics("w2, SWL") == (Statistic.W2, Statistic.SWL)
        assert st.parse_statistics(None, default=st.STUDY_STATISTICS) == st.STUDY_STATISTICS
        with pytest.raises(ValueError):
            st.parse_statistics("w3")

    def test_labels_and_direction(self):
        assert Statistic.SW_ABS.label == "|SW|"
        assert all(s.larger_is_extreme for s in st.ALL_STATISTICS)


class TestExactPValueOracle:
    """Monte Carlo p-values against full enumeration of the conditional law."""

    @pytest.mark.parametrize("x", [(0, 3, 1, 0, 2), (4, 0, 0, 0), (1, 1, 2, 0, 0, 5)])
    def test_small_samples(self, x):
        from condgof.engine import conditional_p_values

        K = 20_000
        res = conditional_p_values(list(x), st.ALL_STATISTICS, K=K, seed=3)
        for stat, r in res.items():
            exact = oracles.exact_conditional_pvalue(x, stat.value)
            band = 4 * math.sqrt(max(exact * (1 - exact), 1 / K) / K)
            assert abs(r.p_cond - exact) <= band + 1e-12, (stat, r.p_cond, exact)


class TestSpecProperties:
    @given(hst.lists(hst.integers(0, 15), min_size=2, max_size=40).filter(lambda x: sum(x) > 0))
    def test_ks_restricted_max_is_global(self, x):
        n, t = len(x), sum(x)
        p = n / (n + t)
        widest = max(
            abs(sum(1 for v in x if v <= k) - n * (1 - (1 - p) ** (k + 1))) for k in range(max(x) + 51)
        )
        assert st.evaluate(x, ["ks"])[Statistic.KS][0] == pytest.approx(widest, abs=1e-9)

    @given(samples)
    def test_edf_statistics_non_negative(self, x):
        v = st.evaluate(x, ["w2", "a2", "ks"])
        assert all(v[s][0] >= 0 for s in v)

    @given(samples)
    def test_cr_raw_equals_grouped(self, x):
        raw = sum(oracles._xlogx(v) - oracles._xlogx(v + 1) for v in x)
        assert st.cr(x) == pytest.approx(raw, abs=1e-12 * max(1, abs(raw)))

    @pytest.mark.parametrize("c", [1, 2, 7])
    def test_constant_sample(self, c):
        x = [c] * 6
        # m1 = c, m2 = c^2, so SB = c^2 - c - 2c^2
        assert st.sb(x) == pytest.approx(-c * c - c)
        assert st.theta_tilde_stat(x) < 0

    def test_cr_all_zero(self):
        assert st.cr([0, 0, 0]) == 0.0

    def test_score_at_mle(self):
        x = [0, 3, 1, 1, 6, 0, 2]
        n, m1 = len(x), np.mean(x)
        m2 = np.mean(np.square(x))
        pi = 1 / (1 + m1)
        assert st.score_known_param(x, pi) == pytest.approx(n * (m2 - m1 - 2 * m1**2) / (2 * m1))
        assert st.score_known_param([0, 0], 0.3) == 0.0
