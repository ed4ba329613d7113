import numpy as np
import pytest
from scipy import optimize, stats

from rdmono.design import Dataset, FunctionSpace
from rdmono.errors import InputError
from rdmono.estimator import split_sides
from rdmono.geometry import MonotoneSet, NormSpec, cost, pos_part, neg_part
from rdmono.minimax import cv_alpha, gain_curve, half_length_at, minimax_ci

V1 = MonotoneSet.full(1)
N1 = NormSpec("wl1", (1.0,))


def cv_oracle(t, alpha):
    # root of P(|Z + t| <= c) = 1 - alpha
    f = lambda c: stats.norm.cdf(c - t) - stats.norm.cdf(-c - t) - (1 - alpha)
    return optimize.brentq(f, 1e-8, t + 20.0, xtol=1e-12)


class TestCvAlpha:
    def test_zero_bias_is_normal_quantile(self):
        assert cv_alpha(0.0, 0.05) == pytest.approx(1.959964, abs=1e-6)

    def test_large_bias_value(self):
        assert cv_alpha(10.0, 0.05) == pytest.approx(11.644854, abs=1e-6)

    def test_matches_root_finding_oracle(self):
        for t in (0.1, 0.7, 1.3, 2.5, 6.0):
            for alpha in (0.01, 0.05, 0.2):
                assert cv_alpha(t, alpha) == pytest.approx(
                    cv_oracle(t, alpha), abs=1e-8)

    def test_monotone_in_bias(self):
        ts = np.linspace(0, 5, 40)
        vals = [cv_alpha(t, 0.05) for t in ts]
        assert np.all(np.diff(vals) > 0)

    def test_rejects_bad_arguments(self):
        with pytest.raises(InputError):
            cv_alpha(-0.1, 0.05)
        with pytest.raises(InputError):
            cv_alpha(1.0, 1.5)


class TestMinimaxCi:
    def test_delta_grid_oracle(self, f4_data, f4_space):
        # brute force over a fine log grid must not beat the optimizer
        ci = minimax_ci(f4_data, f4_space, 0.05)
        sides = split_sides(f4_data, f4_space)
        hi = ci.diagnostics["scan_hi"]
        grid = np.exp(np.linspace(np.log(1e-3), np.log(hi), 1200))
        best = min(half_length_at(d, sides, f4_space, 0.05)[0] for d in grid)
        assert ci.half_length <= best + 1e-6
        assert ci.half_length == pytest.approx(best, rel=1e-5)

    def test_interval_orientation_and_bias_sd_consistency(self, f4_data, f4_space):
        ci = minimax_ci(f4_data, f4_space, 0.05)
        assert ci.lower < ci.estimate < ci.upper
        assert ci.half_length == pytest.approx(
            cv_alpha(ci.worst_bias / ci.sd, 0.05) * ci.sd, rel=1e-12)
        sol_omega = ci.diagnostics["omega"]
        assert ci.worst_bias == pytest.approx(
            max(0.5 * (sol_omega - ci.delta_star * ci.sd), 0.0), rel=1e-10)
        assert f4_space.C * (ci.h_t + ci.h_c) == pytest.approx(sol_omega, rel=1e-12)

    def test_scale_homogeneity(self, f4_data, f4_space):
        lam = 4.0
        scaled = Dataset(f4_data.x, lam * f4_data.y, f4_data.treated,
                         lam * f4_data.sigma)
        space_s = f4_space.with_c(lam * f4_space.C)
        ci = minimax_ci(f4_data, f4_space, 0.05)
        ci_s = minimax_ci(scaled, space_s, 0.05)
        assert ci_s.estimate == pytest.approx(lam * ci.estimate, rel=1e-6)
        assert ci_s.half_length == pytest.approx(lam * ci.half_length, rel=1e-6)

    def test_outcome_shift_invariance(self, f4_data, f4_space):
        shifted = Dataset(f4_data.x, f4_data.y + 11.0, f4_data.treated,
                          f4_data.sigma)
        ci = minimax_ci(f4_data, f4_space, 0.05)
        ci_s = minimax_ci(shifted, f4_space, 0.05)
        assert ci_s.estimate == pytest.approx(ci.estimate, abs=1e-9)
        assert ci_s.half_length == pytest.approx(ci.half_length, rel=1e-12)

    def test_constant_outcome_estimate_is_centering_gap(self, f4_data, f4_space):
        data = Dataset(f4_data.x, np.full(4, 5.0), f4_data.treated,
                       f4_data.sigma)
        ci = minimax_ci(data, f4_space, 0.05)
        assert ci.estimate == pytest.approx(ci.a_c - ci.a_t, abs=1e-12)
        # a zero jump is always inside the interval for constant outcomes
        assert ci.lower <= 0.0 <= ci.upper
        data2 = Dataset(f4_data.x, np.full(4, -3.0), f4_data.treated,
                        f4_data.sigma)
        ci2 = minimax_ci(data2, f4_space, 0.05)
        assert ci2.estimate == pytest.approx(ci.estimate, abs=1e-12)

    def test_rejects_infinite_c(self, f4_data, f4_space):
        with pytest.raises(InputError):
            minimax_ci(f4_data, f4_space.with_c(np.inf), 0.05)


class TestBiasBalance:
    def test_extremal_pair_attains_worst_bias(self, f4_data, f4_space):
        # the centered affine estimator's bias at the two modulus-extremal
        # functions is +/- worst_bias (known variance)
        C = f4_space.C
        ci = minimax_ci(f4_data, f4_space, 0.05)
        sides = split_sides(f4_data, f4_space)
        _, parts = half_length_at(ci.delta_star, sides, f4_space, 0.05)
        t, c = sides
        sol = parts["sol"]
        mask = V1.mask(1)

        def parts_pm(x):
            p = N1.value(pos_part(x, mask))
            m = N1.value(neg_part(x, mask))
            return p, m

        def bias_under(g_t, g_c, jump):
            et = parts["w_t"] @ np.array([g_t(x) for x in t.x]) - ci.a_t
            ec = parts["w_c"] @ np.array([g_c(x) for x in c.x]) - ci.a_c
            return (et - ec) - jump

        # pair one: treated branch C*p with value 0 at the cutoff, control
        # branch omega_c - C*m capped below by C*p, value omega_c at the cutoff
        f1_t = lambda x: C * parts_pm(x)[0]
        f1_c = lambda x: max(sol.omega_c - C * parts_pm(x)[1], C * parts_pm(x)[0])
        f2_t = lambda x: max(sol.omega_t - C * parts_pm(x)[1], C * parts_pm(x)[0])
        f2_c = lambda x: C * parts_pm(x)[0]
        b1 = bias_under(f1_t, f1_c, -sol.omega_c)
        b2 = bias_under(f2_t, f2_c, sol.omega_t)
        assert b1 == pytest.approx(ci.worst_bias, abs=1e-8)
        assert b2 == pytest.approx(-ci.worst_bias, abs=1e-8)

    def test_sup_bias_equals_weighted_cost(self, f4_data, f4_space):
        C = f4_space.C
        ci = minimax_ci(f4_data, f4_space, 0.05)
        sides = split_sides(f4_data, f4_space)
        _, parts = half_length_at(ci.delta_star, sides, f4_space, 0.05)
        t, c = sides
        direct = 0.5 * (parts["w_t"] @ t.costs(C, C) + parts["w_c"] @ c.costs(C, C))
        assert ci.worst_bias == pytest.approx(direct, rel=1e-8)


class TestKnownSigmaCoverage:
    def test_extremal_function_coverage(self):
        # honest coverage at a least favorable function, known variance
        rng = np.random.default_rng(17)
        n, sd, C, alpha = 60, 0.5, 1.0, 0.1
        space = FunctionSpace(C=C, V=V1, norm=N1)
        x = np.concatenate([-rng.uniform(0, 1, n // 2),
                            rng.uniform(0, 1, n // 2)])[:, None]
        treated = x[:, 0] < 0
        # fixed design, f(x) = C x on both sides, zero jump
        f = C * x[:, 0]
        hits = 0
        reps = 200
        for _ in range(reps):
            y = f + rng.standard_normal(n) * sd
            data = Dataset(x, y, treated, np.full(n, sd))
            ci = minimax_ci(data, space, alpha, scan_points=16)
            hits += ci.lower <= 0.0 <= ci.upper
        cov = hits / reps
        se = np.sqrt((1 - alpha) * alpha / reps)
        assert cov >= 1 - alpha - 3 * se


class TestGainCurve:
    def test_ratio_at_least_one_and_fields(self):
        rng = np.random.default_rng(23)
        x = rng.uniform(-1, 1, size=(120, 1))
        y = x[:, 0] + rng.standard_normal(120) * 0.5
        data = Dataset(x, y, x[:, 0] < 0, np.full(120, 0.5))
        space = FunctionSpace(C=1.0, V=V1, norm=N1)
        rows = gain_curve(data, space, [0.5, 1.0, 2.0], alpha=0.05)
        assert len(rows) == 3
        for row in rows:
            assert row["length_ratio"] >= 1.0 - 1e-9
            assert row["bandwidth_ratio"] > 1.0
