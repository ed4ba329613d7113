import numpy as np
import pytest

from rdmono.design import (Dataset, FunctionSpace, TreatmentRule, preprocess,
                           read_csv)
from rdmono.errors import EmptySideError, InputError
from rdmono.estimator import split_sides
from rdmono.geometry import MonotoneSet, NormSpec
from rdmono.minimax import minimax_ci


def space_1d(C=1.0, decreasing=()):
    return FunctionSpace(C=C, V=MonotoneSet.full(1),
                         decreasing=frozenset(decreasing),
                         norm=NormSpec("wl1", (1.0,)))


class TestPreprocess:
    def test_below_treated_sign_rule(self):
        raw = Dataset([[-0.3], [0.4]], [1.0, 2.0], [False, False])
        out, _ = preprocess(raw, TreatmentRule("MRA", "below-treated"),
                            space_1d(), None)
        np.testing.assert_array_equal(out.treated, [True, False])
        np.testing.assert_allclose(out.x, raw.x)

    def test_cutoff_relabeling(self):
        raw = Dataset([[-0.3], [0.4]], [1.0, 2.0], [False, False])
        out, _ = preprocess(raw, TreatmentRule("MRA", "below-treated"),
                            space_1d(), [0.2])
        np.testing.assert_allclose(out.x[:, 0], [-0.5, 0.2])

    def test_decreasing_coordinate_reflected(self):
        raw = Dataset([[-0.3], [0.4]], [1.0, 2.0], [True, False])
        out, sp = preprocess(raw, TreatmentRule("column"),
                             space_1d(decreasing=(1,)), None)
        np.testing.assert_allclose(out.x[:, 0], [0.3, -0.4])
        np.testing.assert_array_equal(out.treated, [True, False])
        assert sp.decreasing == frozenset()

    def test_idempotent_on_normalized_data(self):
        raw = Dataset([[-0.3], [0.4]], [1.0, 2.0], [True, False])
        once, sp = preprocess(raw, TreatmentRule("column"), space_1d(), None)
        twice, _ = preprocess(once, TreatmentRule("column"), sp, None)
        np.testing.assert_array_equal(once.x, twice.x)
        np.testing.assert_array_equal(once.treated, twice.treated)

    def test_tie_goes_to_control(self, caplog):
        raw = Dataset([[0.0], [-0.1], [0.4]], [1.0, 2.0, 3.0],
                      [False, False, False])
        out, _ = preprocess(raw, TreatmentRule("MRA", "below-treated"),
                            space_1d(), None)
        np.testing.assert_array_equal(out.treated, [False, True, False])

    def test_rule_column_conflict(self):
        raw = Dataset([[-0.3], [0.4]], [1.0, 2.0], [False, True])
        with pytest.raises(InputError, match="conflict"):
            preprocess(raw, TreatmentRule("MRA", "below-treated"),
                       space_1d(), None)

    def test_empty_side_detected(self):
        raw = Dataset([[0.3], [0.4]], [1.0, 2.0], [False, False])
        with pytest.raises(EmptySideError):
            preprocess(raw, TreatmentRule("MRA", "below-treated"),
                       space_1d(), None)

    def test_mro_vs_mra(self):
        raw = Dataset([[-1.0, 1.0], [-1.0, -1.0], [1.0, 1.0]],
                      [0.0, 0.0, 0.0], [False] * 3)
        sp = FunctionSpace(C=1.0, V=MonotoneSet.full(2),
                           norm=NormSpec("wl1", (1.0, 1.0)))
        mro, _ = preprocess(raw, TreatmentRule("MRO", "below-treated"), sp)
        mra, _ = preprocess(raw, TreatmentRule("MRA", "below-treated"), sp)
        np.testing.assert_array_equal(mro.treated, [True, True, False])
        np.testing.assert_array_equal(mra.treated, [False, True, False])

    def test_wav_rule(self):
        raw = Dataset([[-1.0, 0.4], [1.0, 0.4]], [0.0, 0.0], [False, False])
        sp = FunctionSpace(C=1.0, V=MonotoneSet.full(2),
                           norm=NormSpec("wl1", (1.0, 1.0)))
        rule = TreatmentRule("WAV", "below-treated", wav_weights=(1.0, 1.0))
        out, _ = preprocess(raw, rule, sp)
        np.testing.assert_array_equal(out.treated, [True, False])


class TestReflectionProperty:
    def test_downstream_ci_matches_manual_negation(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(-1, 1, size=(80, 1))
        y = 0.5 * x[:, 0] + rng.standard_normal(80) * 0.3
        treated = x[:, 0] < 0
        sigma = np.full(80, 0.3)
        raw_dec = Dataset(-x, y, treated, sigma)
        data_dec, sp_dec = preprocess(raw_dec, TreatmentRule("column"),
                                      space_1d(decreasing=(1,)), None)
        data_man, sp_man = preprocess(Dataset(x, y, treated, sigma),
                                      TreatmentRule("column"), space_1d(), None)
        ci_dec = minimax_ci(split_sides(data_dec, sp_dec), sp_dec, 0.05)
        ci_man = minimax_ci(split_sides(data_man, sp_man), sp_man, 0.05)
        assert ci_dec.estimate == ci_man.estimate
        assert ci_dec.half_length == ci_man.half_length


class TestCsv:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,x1,treated,sigma\n1.0,-0.5,1,0.5\n2.0,0.5,0,0.5\n")
        data = read_csv(p)
        assert data.n == 2 and data.d == 1
        np.testing.assert_array_equal(data.treated, [True, False])
        np.testing.assert_allclose(data.sigma, [0.5, 0.5])

    def test_missing_y_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("z,x1\n1,2\n")
        with pytest.raises(InputError, match="'y'"):
            read_csv(p)

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,x1\n1.0,-0.5\noops,0.5\n")
        with pytest.raises(InputError):
            read_csv(p)

    def test_multidim_columns(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,x1,x2\n1.0,-0.5,0.1\n2.0,0.5,-0.2\n")
        assert read_csv(p).d == 2


class TestDataset:
    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(InputError):
            Dataset([[0.0]], [1.0], [True], [0.0])

    def test_reflection_involution(self):
        d = Dataset([[-0.3], [0.4]], [1.0, 2.0], [True, False], [1.0, 1.0])
        rr = d.reflected().reflected()
        np.testing.assert_array_equal(rr.x, d.x)
        np.testing.assert_array_equal(rr.y, d.y)
