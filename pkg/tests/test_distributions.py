import math

import numpy as np
import pytest
from scipy import stats as sps

from condgof import distributions as d
from condgof.datasets import load_fixture
from condgof.errors import DegenerateSampleError, EstimationError, ParameterError

import oracles


class TestPmfs:
    def test_geometric(self):
        g = d.Geometric(0.3)
        x = np.arange(30)
        np.testing.assert_allclose(g.pmf(x), sps.geom.pmf(x + 1, 0.3))
        np.testing.assert_allclose(g.sf(x), 0.7**x)
        assert g.pmf(-1) == 0.0

    def test_poisson_binomial_negbinomial(self):
        x = np.arange(12)
        np.testing.assert_allclose(d.Poisson(2.5).pmf(x), sps.poisson.pmf(x, 2.5))
        np.testing.assert_allclose(d.Binomial(7, 0.35).pmf(x), sps.binom.pmf(x, 7, 0.35), atol=1e-15)
        np.testing.assert_allclose(d.NegBinomial(3, 0.4).pmf(x), sps.nbinom.pmf(x, 3, 0.4))
        assert d.NegBinomial(5, 0.5).pmf(2) == pytest.approx(15 / 128)

    @pytest.mark.parametrize("a,b", [(2, 5), (2, 2), (0.7, 3.1)])
    def test_betageometric_forms_agree(self, a, b):
        bg = d.BetaGeometric.from_alpha_beta(a, b)
        x = np.arange(40)
        want = [oracles.betageometric_pmf(int(v), a, b) for v in x]
        np.testing.assert_allclose(bg.pmf(x), want, rtol=1e-10)
        np.testing.assert_allclose(bg.logpmf(x), bg.logpmf_beta_integral(x), rtol=1e-10)
        assert bg.alpha == pytest.approx(a) and bg.beta == pytest.approx(b)

    def test_betageometric_theta_zero_is_geometric(self):
        x = np.arange(20)
        np.testing.assert_allclose(d.BetaGeometric(0.3, 0.0).pmf(x), d.Geometric(0.3).pmf(x))
        with pytest.raises(ParameterError):
            d.BetaGeometric(0.3, 0.0).logpmf_beta_integral(1)

    def test_discrete_weibull(self):
        w = d.DiscreteWeibull(0.6, 1.4)
        x = np.arange(25)
        np.testing.assert_allclose(w.pmf(x), [oracles.dweibull_pmf(int(v), 0.6, 1.4) for v in x], atol=1e-15)
        np.testing.assert_allclose(w.sf(x), 0.6 ** (x**1.4))
        # beta = 1 is geometric with p = 1 - q
        np.testing.assert_allclose(d.DiscreteWeibull(0.6, 1.0).pmf(x), d.Geometric(0.4).pmf(x))

    def test_hazard_monotone(self):
        x = np.arange(10)
        assert np.all(np.diff(d.DiscreteWeibull(0.5, 1.5).hazard(x)) > 0)
        assert np.all(np.diff(d.DiscreteWeibull(0.5, 0.7).hazard(x)) < 0)
        np.testing.assert_allclose(d.hazard_discrete_weibull(d.DiscreteWeibull(0.5, 1.0), x), 0.5)
        w = d.DiscreteWeibull(0.7, 1.3)
        np.testing.assert_allclose(w.hazard(x), w.pmf(x) / w.sf(x))

    def test_powerseries_poisson(self):
        ps = d.PowerSeries(d.log_coefficients("poisson"), 1.7, max_support=200)
        np.testing.assert_allclose(ps.pmf(np.arange(15)), sps.poisson.pmf(np.arange(15), 1.7))

    def test_log_coefficients(self):
        x = np.arange(6)
        np.testing.assert_allclose(np.exp(d.log_coefficients("binomial", 4)(x))[:5], [1, 4, 6, 4, 1])
        assert d.log_coefficients("binomial", 4)(np.array([5.0]))[0] == -np.inf
        np.testing.assert_allclose(np.exp(d.log_coefficients("negbinomial", 3)(x)), [math.comb(v + 2, v) for v in x])
        with pytest.raises(ParameterError):
            d.log_coefficients("zeta")

    @pytest.mark.parametrize(
        "bad",
        [lambda: d.Geometric(0.0), lambda: d.Poisson(-1), lambda: d.Binomial(0, 0.5),
         lambda: d.NegBinomial(2, 1.5), lambda: d.BetaGeometric(0.5, -1), lambda: d.DiscreteWeibull(0.5, 0)],
    )
    def test_invalid_parameters(self, bad):
        with pytest.raises(ParameterError):
            bad()


class TestSampling:
    @pytest.mark.parametrize(
        "dist",
        [d.Geometric(0.35), d.Poisson(1.0), d.Binomial(5, 0.3), d.NegBinomial(2, 0.4),
         d.BetaGeometric.from_alpha_beta(3, 4), d.DiscreteWeibull(0.5, 1.5)],
        ids=lambda x: type(x).__name__,
    )
    def test_sampler_matches_pmf(self, dist):
        rng = np.random.default_rng(21)
        x = d.sample(dist, 100_000, rng)
        top = 12
        counts = np.bincount(np.minimum(x, top), minlength=top + 1)
        probs = np.append(dist.pmf(np.arange(top)), dist.sf(top))
        keep = probs * x.size > 5
        # merge sparse cells into the last kept one so the test stays valid
        obs = np.append(counts[keep][:-1], counts[~keep].sum() + counts[keep][-1])
        exp = np.append(probs[keep][:-1], probs[~keep].sum() + probs[keep][-1])
        assert oracles.chi_square_pvalue(obs, exp) > 1e-3

    def test_sample_size_validated(self):
        with pytest.raises(ParameterError):
            d.sample(d.Geometric(0.5), 0, np.random.default_rng(0))

    def test_expected_frequencies(self):
        e = d.expected_frequencies(d.Geometric(0.5), 10, 3, lump=2)
        np.testing.assert_allclose(e, [5.0, 2.5, 2.5])


class TestScores:
    @pytest.mark.parametrize("pi,theta", [(0.4, 0.1), (0.2, 0.5), (0.6, 0.02)])
    def test_betageometric_score_finite_difference(self, pi, theta):
        x = load_fixture("betageo_n100")
        h = 1e-6
        f = lambda a, b: d.betageometric_loglik(x, a, b)
        fd = ((f(pi + h, theta) - f(pi - h, theta)) / (2 * h), (f(pi, theta + h) - f(pi, theta - h)) / (2 * h))
        np.testing.assert_allclose(d.betageometric_score(x, pi, theta), fd, rtol=1e-5)

    @pytest.mark.parametrize("q,beta", [(0.7, 1.2), (0.4, 0.8)])
    def test_dweibull_score_finite_difference(self, q, beta):
        x = load_fixture("dweibull_n50")
        h = 1e-6
        f = lambda a, b: d.discrete_weibull_loglik(x, a, b)
        fd = ((f(q + h, beta) - f(q - h, beta)) / (2 * h), (f(q, beta + h) - f(q, beta - h)) / (2 * h))
        np.testing.assert_allclose(d.discrete_weibull_score(x, q, beta), fd, rtol=1e-5)

    def test_loglik_equals_pmf_sum(self):
        x = load_fixture("inspection")
        bg = d.BetaGeometric(0.3, 0.2)
        assert d.betageometric_loglik(x, 0.3, 0.2) == pytest.approx(float(np.sum(bg.logpmf(x.values))))
        w = d.DiscreteWeibull(0.8, 0.9)
        assert d.discrete_weibull_loglik(x, 0.8, 0.9) == pytest.approx(float(np.sum(w.logpmf(x.values))))


class TestFits:
    def test_geometric(self):
        assert d.fit_geometric([0, 1, 2, 3]).p == pytest.approx(4 / 10)
        with pytest.raises(DegenerateSampleError):
            d.fit_geometric([0, 0])

    def test_betageometric_overdispersed_fixture(self):
        res = d.fit_betageometric(load_fixture("betageo_n100"))
        assert res.params.pi == pytest.approx(0.4274, abs=5e-4)
        assert res.params.theta == pytest.approx(0.1166, abs=5e-4)
        assert not res.boundary

    def test_betageometric_boundary(self):
        # underdispersed data: SB <= 0 puts the maximum at theta = 0
        res = d.fit_betageometric(load_fixture("dweibull_n50"))
        assert res.boundary and res.params.theta == 0.0
        assert res.params.pi == pytest.approx(d.fit_geometric(load_fixture("dweibull_n50")).p)

    def test_dweibull_underdispersed_fixture(self):
        res = d.fit_discrete_weibull(load_fixture("dweibull_n50"))
        assert res.params.q == pytest.approx(0.7239, abs=5e-4)
        assert res.params.beta == pytest.approx(1.2663, abs=5e-4)

    @pytest.mark.parametrize("name", ["betageo_n100", "inspection"])
    def test_betageometric_against_nelder_mead(self, name):
        x = load_fixture(name)
        counts = np.bincount(x.values)

        def ll(pi, theta):
            if not (0 < pi < 1 and theta > 0):
                return -np.inf
            a, b = pi / theta, (1 - pi) / theta
            return sum(c * math.log(oracles.betageometric_pmf(v, a, b)) for v, c in enumerate(counts) if c)

        (pi, theta), best = oracles.nelder_mead_max(ll, [0.4, 0.1])
        res = d.fit_betageometric(x)
        assert res.loglik >= best - 1e-7
        assert res.params.pi == pytest.approx(pi, abs=1e-4)
        assert res.params.theta == pytest.approx(theta, abs=1e-4)

    @pytest.mark.parametrize("name", ["dweibull_n50", "inspection", "betageo_n100"])
    def test_dweibull_against_nelder_mead(self, name):
        x = load_fixture(name)
        counts = np.bincount(x.values)

        def ll(q, beta):
            if not (0 < q < 1 and beta > 0):
                return -np.inf
            return sum(c * math.log(oracles.dweibull_pmf(v, q, beta)) for v, c in enumerate(counts) if c)

        (q, beta), best = oracles.nelder_mead_max(ll, [0.6, 1.0])
        res = d.fit_discrete_weibull(x)
        assert res.loglik >= best - 1e-7
        assert res.params.q == pytest.approx(q, abs=1e-4)
        assert res.params.beta == pytest.approx(beta, abs=1e-4)

    def test_real_data(self):
        x = load_fixture("inspection")
        bg = d.fit_betageometric(x).params
        w = d.fit_discrete_weibull(x).params
        assert (bg.pi, bg.theta) == pytest.approx((0.1772, 0.0502), abs=1e-3)
        assert (w.q, w.beta) == pytest.approx((0.784, 0.794), abs=1e-3)

    def test_inspection_expected_frequencies(self):
        x = load_fixture("inspection")
        w = d.fit_discrete_weibull(x).params
        bg = d.fit_betageometric(x).params
        g = d.fit_geometric(x)
        e = lambda m: np.round(d.expected_frequencies(m, x.n, 4, lump=5), 1)
        np.testing.assert_allclose(e(w), [6.0, 3.6, 2.7, 2.2, 1.8, 11.7])
        np.testing.assert_allclose(e(bg), [5.0, 3.9, 3.1, 2.5, 2.0, 11.6])
        np.testing.assert_allclose(e(g), [3.9, 3.3, 2.9, 2.5, 2.1, 13.3])

    def test_estimation_failure_carries_best_iterate(self, monkeypatch):
        from scipy import optimize

        real = optimize.minimize

        def stalled(*args, **kwargs):
            res = real(*args, **{**kwargs, "options": {"maxiter": 1}})
            res.success = False
            return res

        monkeypatch.setattr(d.optimize, "minimize", stalled)
        with pytest.raises(EstimationError) as info:
            d.fit_discrete_weibull(load_fixture("inspection"))
        assert info.value.best is not None

    def test_moment_estimate(self):
        m = d.moment_estimate_betageometric(load_fixture("betageo_n100"))
        assert m.theta == pytest.approx(0.082955, abs=1e-5)
        assert m.alpha > 0 and m.beta > 0


def test_overdispersed_expected_columns():
    # reference columns are printed truncated to one decimal, hence the 0.1 band
    x = load_fixture("betageo_n100")
    geo = [35.4, 22.8, 14.8, 9.5, 6.2, 4.0, 2.6, 1.7, 1.1, 0.7, 0.4, 0.3, 0.2, 0.1, 0.1, 0.0, 0.0]
    bg = [42.7, 21.9, 12.2, 7.3, 4.6, 3.0, 2.1, 1.4, 1.0, 0.8, 0.6, 0.4, 0.3, 0.3, 0.2, 0.2, 0.1]
    e_geo = d.expected_frequencies(d.fit_geometric(x), x.n, 16)
    e_bg = d.expected_frequencies(d.fit_betageometric(x).params, x.n, 16)
    np.testing.assert_allclose(e_geo, geo, atol=0.1)
    np.testing.assert_allclose(e_bg, bg, atol=0.1)
