import itertools

import numpy as np
import pytest

from rdmono.cbound import c_lower_bound, c_lower_bound_1d, c_lower_bound_nd
from rdmono.design import Dataset, FunctionSpace
from rdmono.errors import InputError
from rdmono.geometry import MonotoneSet, NormSpec


def space_nd(d, kind="wl1"):
    return FunctionSpace(C=1.0, V=MonotoneSet.full(d),
                         norm=NormSpec(kind, (1.0,) * d))


def dataset_1d(xt, yt, xc, yc):
    x = np.concatenate([xt, xc])[:, None]
    y = np.concatenate([yt, yc])
    treated = np.arange(x.shape[0]) < len(xt)
    return Dataset(x, y, treated)


class TestOneDim:
    def test_linear_function_recovers_slope(self):
        xt = np.array([-0.8, -0.6, -0.4, -0.2])
        xc = np.array([0.2, 0.4, 0.6, 0.8])
        rep = c_lower_bound_1d(dataset_1d(xt, 1.5 * xt, xc, 1.5 * xc))
        assert rep.mu_t == pytest.approx(1.5)
        assert rep.mu_c == pytest.approx(1.5)
        assert rep.suggested_c_lo == pytest.approx(1.5)

    def test_constant_function_gives_zero(self):
        xt = np.array([-0.8, -0.6, -0.4])
        xc = np.array([0.2, 0.4, 0.6])
        rep = c_lower_bound_1d(dataset_1d(xt, np.ones(3), xc, np.ones(3)))
        assert rep.mu_t == 0.0 and rep.mu_c == 0.0
        assert rep.suggested_c_lo == 0.0

    def test_location_invariance(self):
        rng = np.random.default_rng(3)
        xt, xc = -rng.uniform(0.1, 1, 9), rng.uniform(0.1, 1, 8)
        yt, yc = rng.standard_normal(9), rng.standard_normal(8)
        base = c_lower_bound_1d(dataset_1d(xt, yt, xc, yc))
        shift = c_lower_bound_1d(dataset_1d(xt, yt + 5.0, xc, yc - 3.0))
        assert shift.mu_t == pytest.approx(base.mu_t)
        assert shift.mu_c == pytest.approx(base.mu_c)

    def test_odd_side_drops_median(self):
        # treated x sorted: -3, -2, -1; halves are {-3} and {-1}
        xt = np.array([-1.0, -3.0, -2.0])
        yt = np.array([6.0, 0.0, 100.0])
        xc = np.array([1.0, 2.0])
        rep = c_lower_bound_1d(dataset_1d(xt, yt, xc, np.zeros(2)))
        assert rep.mu_t == pytest.approx((6.0 - 0.0) / 2.0)
        assert rep.split_points[0] == pytest.approx(-2.0)

    def test_unbiased_below_c_lipschitz(self):
        # E mu <= C for a monotone C-Lipschitz truth; check via MC
        rng = np.random.default_rng(11)
        C = 2.0
        mus = []
        for _ in range(300):
            xt = -rng.uniform(0, 1, 20)
            xc = rng.uniform(0, 1, 20)
            yt = C * xt + rng.standard_normal(20) * 0.3
            yc = C * xc + rng.standard_normal(20) * 0.3
            rep = c_lower_bound_1d(dataset_1d(xt, yt, xc, yc))
            mus.extend([rep.mu_t, rep.mu_c])
        assert np.mean(mus) <= C + 3 * np.std(mus) / np.sqrt(len(mus))
        assert np.mean(mus) == pytest.approx(C, abs=0.1)

    def test_constant_x_rejected(self):
        with pytest.raises(InputError):
            c_lower_bound_1d(dataset_1d(np.array([-1.0, -1.0]),
                                        np.zeros(2),
                                        np.array([1.0, 2.0]), np.zeros(2)))


class TestMultiDim:
    def test_chain_recovers_linear_slope(self):
        # points on the diagonal dominate pairwise; f = x1 + x2, wl1 norm
        xt = -np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
        xc = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
        x = np.vstack([xt, xc])
        y = x.sum(axis=1) * 0.5
        data = Dataset(x, y, np.arange(8) < 4)
        rep = c_lower_bound_nd(data, space_nd(2))
        assert rep.mu_t == pytest.approx(0.5)
        assert rep.mu_c == pytest.approx(0.5)
        assert rep.pair_counts == (2, 2)

    def test_pairing_never_beats_exhaustive_max(self):
        # the greedy estimate is a ratio of sums over an admissible matching;
        # each matched ratio is at most the maximum pairwise slope
        rng = np.random.default_rng(5)
        for _ in range(20):
            xs = rng.uniform(0, 1, size=(8, 2))
            ys = rng.standard_normal(8)
            x = np.vstack([-xs - 0.1, xs + 0.1])
            y = np.concatenate([ys, ys])
            data = Dataset(x, y, np.arange(16) < 8)
            space = space_nd(2)
            try:
                rep = c_lower_bound_nd(data, space)
            except InputError:
                continue
            best = -np.inf
            for i, j in itertools.permutations(range(8), 2):
                diff = xs[j] - xs[i]
                if np.all(diff >= 0) and np.any(diff > 0):
                    best = max(best, (ys[j] - ys[i]) / space.norm.value(diff))
            assert rep.mu_c <= best + 1e-12

    def test_requires_full_monotone_set(self):
        x = np.array([[-1.0, -1.0], [-2.0, -2.0], [1.0, 1.0], [2.0, 2.0]])
        data = Dataset(x, x.sum(axis=1), np.arange(4) < 2)
        space = FunctionSpace(C=1.0, V=MonotoneSet((1,)),
                              norm=NormSpec("wl1", (1.0, 1.0)))
        with pytest.raises(InputError, match="V"):
            c_lower_bound_nd(data, space)

    def test_antichain_rejected(self):
        # no componentwise dominance anywhere
        x = np.array([[-1.0, -4.0], [-2.0, -3.0], [-3.0, -2.0], [-4.0, -1.0],
                      [1.0, 4.0], [2.0, 3.0], [3.0, 2.0], [4.0, 1.0]])
        data = Dataset(x, np.zeros(8), np.arange(8) < 4)
        with pytest.raises(InputError, match="pairs"):
            c_lower_bound_nd(data, space_nd(2))


def test_dispatcher_picks_dimension():
    xt = np.array([-0.8, -0.4])
    xc = np.array([0.4, 0.8])
    rep = c_lower_bound(dataset_1d(xt, xt, xc, xc), space_nd(1))
    assert rep.split_points is not None
