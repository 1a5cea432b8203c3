import numpy as np
import pytest

from rgevselect.distributions import GevParams, NsGevParams, WakebyParams, gev_cdf
from rgevselect.exceptions import DataValidationError
from rgevselect.rlos import RLosSample, as_rlos_sample, load_rlos_csv
from rgevselect.sampling import contaminate, sample_rgev, sample_rgev11, sample_wakeby_rlos


class TestRLosSample:
    def test_row_monotonicity_enforced(self):
        with pytest.raises(DataValidationError, match="row 2"):
            RLosSample(np.array([[3.0, 2.0], [1.0, 4.0]]))

    def test_non_finite_rejected(self):
        with pytest.raises(DataValidationError, match="block 1"):
            RLosSample(np.array([[np.nan, 1.0]]))

    def test_ties_allowed(self):
        s = RLosSample(np.array([[2.0, 2.0, 1.0]]))
        assert s.n_blocks == 1 and s.n_orders == 3

    def test_time_length_checked(self):
        with pytest.raises(DataValidationError):
            RLosSample(np.array([[2.0, 1.0]]), time=[1, 2])

    def test_top_subsets_columns(self):
        s = RLosSample(np.array([[3.0, 2.0, 1.0], [6.0, 5.0, 4.0]]), time=[1, 2])
        t = s.top(2)
        assert t.n_orders == 2
        assert np.array_equal(t.time, [1, 2])

    def test_time_index_required_when_missing(self):
        s = as_rlos_sample([[2.0, 1.0]])
        with pytest.raises(DataValidationError):
            s.time_index()


class TestCsvLoading:
    def _write(self, tmp_path, text):
        path = tmp_path / "data.csv"
        path.write_text(text)
        return str(path)

    def test_round_trip(self, tmp_path):
        path = self._write(tmp_path, "year,r1,r2\n1990,5.0,3.0\n1991,4.5,2.0\n")
        sample, years = load_rlos_csv(path)
        assert sample.n_blocks == 2
        assert np.array_equal(years, [1990, 1991])
        assert np.array_equal(sample.time, [1, 2])

    def test_increasing_row_names_row(self, tmp_path):
        path = self._write(tmp_path, "year,r1,r2\n1990,5.0,3.0\n1991,2.0,4.0\n")
        with pytest.raises(DataValidationError, match="row 2"):
            load_rlos_csv(path)

    def test_bad_year_names_line(self, tmp_path):
        path = self._write(tmp_path, "year,r1\n199O,5.0\n")
        with pytest.raises(DataValidationError, match="line 2"):
            load_rlos_csv(path)

    def test_missing_value_names_column(self, tmp_path):
        path = self._write(tmp_path, "year,r1,r2\n1990,5.0,\n")
        with pytest.raises(DataValidationError, match="column 3"):
            load_rlos_csv(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = self._write(tmp_path, "year,r1,r2\n1990,5.0,3.0\n1991,4.0\n")
        with pytest.raises(DataValidationError, match="expected 3 fields"):
            load_rlos_csv(path)

    def test_years_must_increase(self, tmp_path):
        path = self._write(tmp_path, "year,r1\n1990,5.0\n1990,4.0\n")
        with pytest.raises(DataValidationError, match="strictly increasing"):
            load_rlos_csv(path)


class TestSampleRgev11:
    def test_rows_non_increasing_and_time_set(self):
        params = NsGevParams(0.0, 0.1, 1.0, 0.02, 0.1)
        s = sample_rgev11(40, 6, params, seed=1)
        assert np.all(np.diff(s.values, axis=1) <= 0)
        assert np.array_equal(s.time, np.arange(1, 41))

    def test_fixed_seed_bit_reproducible(self):
        params = NsGevParams(0.0, 0.1, 1.0, 0.02, 0.0)
        a = sample_rgev11(25, 5, params, seed=42)
        b = sample_rgev11(25, 5, params, seed=42)
        assert np.array_equal(a.values, b.values)
        c = sample_rgev11(25, 5, params, seed=43)
        assert not np.array_equal(a.values, c.values)

    def test_top1_marginal_matches_gev_cdf(self):
        params = GevParams(0.5, 2.0, 0.1)
        s = sample_rgev(100_000, 1, params, seed=9)
        xs = np.sort(s.values[:, 0])
        ecdf = np.arange(1, xs.size + 1) / xs.size
        gap = np.max(np.abs(gev_cdf(xs, params) - ecdf))
        assert gap < 0.01

    def test_uniform_product_layer_gamma_means(self):
        # -log W_j is a sum of j unit exponentials
        params = GevParams(0.0, 1.0, 0.0)
        s = sample_rgev(100_000, 5, params, seed=30)
        # reconstruct W from the Gumbel-case identity W = exp(-exp(-x))
        w = np.exp(-np.exp(-s.values))
        neg_log = -np.log(w)
        for j in range(5):
            assert abs(neg_log[:, j].mean() - (j + 1)) < 0.05 * (j + 1)

    def test_blocks_uncorrelated(self):
        params = GevParams(0.0, 1.0, 0.0)
        s = sample_rgev(100_000, 2, params, seed=77)
        col = s.values[:, 0]
        lag = np.corrcoef(col[:-1], col[1:])[0, 1]
        assert abs(lag) < 0.02


class TestSampleWakeby:
    PARAMS = WakebyParams(xi=0.0, alpha=4.0, beta=0.6, gamma=1.0, delta=0.15)

    def test_block_size_equals_orders_gives_sorted_block(self):
        s = sample_wakeby_rlos(10, 5, self.PARAMS, block_size=5, seed=3)
        assert np.all(np.diff(s.values, axis=1) <= 0)

    def test_block_size_validated(self):
        with pytest.raises(ValueError):
            sample_wakeby_rlos(10, 5, self.PARAMS, block_size=4)

    def test_column_one_dominates_column_two(self):
        s = sample_wakeby_rlos(100_000, 2, self.PARAMS, block_size=50, seed=8)
        grid = np.quantile(s.values, np.linspace(0.05, 0.95, 19))
        c1 = np.sort(s.values[:, 0])
        c2 = np.sort(s.values[:, 1])
        f1 = np.searchsorted(c1, grid) / c1.size
        f2 = np.searchsorted(c2, grid) / c2.size
        assert np.all(f1 <= f2 + 1e-12)

    def test_reproducible(self):
        a = sample_wakeby_rlos(20, 3, self.PARAMS, seed=5)
        b = sample_wakeby_rlos(20, 3, self.PARAMS, seed=5)
        assert np.array_equal(a.values, b.values)


class TestContaminate:
    def _sample(self):
        return sample_rgev(30, 10, GevParams(0.0, 1.0, 0.0), seed=12)

    def test_identity_at_p_one(self):
        s = self._sample()
        out = contaminate(s, 5, 1.0)
        assert np.array_equal(out.values, s.values)

    def test_full_shift_at_p_zero(self):
        s = self._sample()
        out = contaminate(s, 5, 0.0)
        assert np.array_equal(out.values[:, 5:9], s.values[:, 6:10])
        assert np.array_equal(out.values[:, :5], s.values[:, :5])
        assert np.array_equal(out.values[:, 9], s.values[:, 9])

    @pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_rows_stay_monotone(self, p):
        out = contaminate(self._sample(), 5, p)
        assert np.all(np.diff(out.values, axis=1) <= 0)

    def test_uses_original_values(self):
        s = self._sample()
        out = contaminate(s, 5, 0.5)
        expect = 0.5 * s.values[:, 5:9] + 0.5 * s.values[:, 6:10]
        assert np.allclose(out.values[:, 5:9], expect)

    def test_range_validated(self):
        s = self._sample()
        with pytest.raises(ValueError):
            contaminate(s, 10, 0.5)
        with pytest.raises(ValueError):
            contaminate(s, 5, 1.5)
