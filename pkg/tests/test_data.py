import numpy as np
import pytest

import hdcox as hx

from conftest import naive_mu, random_instance


class TestNewDataset:
    def test_already_sorted(self):
        ds = hx.new_dataset([1, 2], [1, 1], [[1], [0]])
        assert list(ds.sort_order) == [0, 1]

    def test_swap(self):
        ds = hx.new_dataset([2, 1], [1, 1], [[1], [0]])
        assert list(ds.sort_order) == [1, 0]
        assert list(ds.times_sorted) == [1, 2]

    def test_stable_ties(self):
        ds = hx.new_dataset([2, 1, 2, 1], [1, 1, 0, 1], np.zeros((4, 1)))
        assert list(ds.sort_order) == [1, 3, 0, 2]

    def test_no_events(self):
        with pytest.raises(hx.NoEventsError):
            hx.new_dataset([1, 2], [0, 0], [[1], [0]])

    def test_dimension_mismatch(self):
        with pytest.raises(hx.DimensionMismatchError):
            hx.new_dataset([1, 2, 3], [1, 1], [[1], [0]])

    def test_nonfinite(self):
        with pytest.raises(hx.NonFiniteError):
            hx.new_dataset([1, 2], [1, 1], [[np.nan], [0]])

    def test_nonpositive_time(self):
        with pytest.raises(hx.NonPositiveTimeError):
            hx.new_dataset([0.0, 2], [1, 1], [[1], [0]])

    def test_bad_status(self):
        with pytest.raises(hx.SchemaError):
            hx.new_dataset([1, 2], [1, 2], [[1], [0]])

    def test_original_order_recoverable(self):
        ds = hx.new_dataset([3, 1, 2], [1, 1, 1], [[3], [1], [2]])
        assert np.array_equal(ds.times_sorted[np.argsort(ds.sort_order)], ds.times)


class TestRiskMoments:
    def test_hand_values(self, tiny_ds):
        rm = hx.risk_moments(tiny_ds, [0.0])
        assert rm.mu0 == pytest.approx([1.0, 0.5])
        assert rm.mu1.ravel() == pytest.approx([0.5, 0.0])

    def test_zero_beta_is_at_risk_fraction(self):
        ds = random_instance(1, n=30, p=2)
        rm = hx.risk_moments(ds, np.zeros(2))
        at_risk = [(ds.times >= t).mean() for t in rm.event_times]
        assert rm.mu0 == pytest.approx(at_risk, abs=0)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_naive_double_loop(self, seed):
        ds = random_instance(seed, n=20, p=3)
        beta = np.random.default_rng(seed + 100).normal(size=3) * 0.5
        rm = hx.risk_moments(ds, beta)
        for i, t in enumerate(rm.event_times):
            assert rm.mu0[i] == pytest.approx(naive_mu(ds, beta, t, 0), rel=1e-12)
            assert rm.mu1[i] == pytest.approx(naive_mu(ds, beta, t, 1), rel=1e-12)

    def test_step_lookup_matches_next_observed_time(self):
        ds = random_instance(2, n=25, p=2)
        rm = hx.risk_moments(ds, [0.1, -0.2])
        rng = np.random.default_rng(3)
        ts = rng.uniform(ds.times.min() * 0.5, ds.times.max() * 1.1, size=40)
        for t in ts:
            later = ds.times[ds.times >= t]
            snapped = later.min() if later.size else ds.times.max() + 1.0
            assert rm.mu0_at(t)[0] == pytest.approx(rm.mu0_at(snapped)[0], abs=0)

    def test_mu0_nonincreasing(self):
        ds = random_instance(4, n=40, p=2)
        rm = hx.risk_moments(ds, [0.3, 0.1])
        grid = np.sort(np.random.default_rng(0).uniform(0, ds.times.max(), 60))
        vals = rm.mu0_at(grid)
        assert np.all(np.diff(vals) <= 1e-15)

    def test_shift_invariance_of_ratios(self):
        # mu1/mu0 must be identical whether eta is huge or centered
        ds_base = random_instance(5, n=15, p=1)
        big = hx.new_dataset(ds_base.times, ds_base.status, ds_base.design)
        rm = hx.risk_moments(big, [100.0])
        ratios = rm.mean_at_events()
        assert np.all(np.isfinite(ratios))

    def test_beta_length_checked(self, tiny_ds):
        with pytest.raises(hx.DimensionMismatchError):
            hx.risk_moments(tiny_ds, [0.0, 1.0])

    def test_quadratic_operator_matches_naive(self):
        ds = random_instance(6, n=18, p=3)
        beta = np.array([0.3, -0.2, 0.5])
        rm = hx.risk_moments(ds, beta)
        v = np.array([0.7, -1.1, 0.4])
        got = rm.mu2_over_mu0_quadratic(v)
        for i, t in enumerate(rm.event_times):
            num = 0.0
            for j in range(ds.n):
                if ds.times[j] >= t:
                    w = np.exp(float(ds.design[j] @ beta))
                    num += w * float(ds.design[j] @ v) ** 2
            expected = (num / ds.n) / naive_mu(ds, beta, t, 0)
            assert got[i] == pytest.approx(expected, rel=1e-11)


class TestCsv(object):
    def _write(self, tmp_path, text):
        f = tmp_path / "data.csv"
        f.write_text(text)
        return f

    def test_round_trip(self, tmp_path):
        f = self._write(tmp_path, "time,status,x1,x2\n1.5,1,0.3,-1\n2.5,0,0.1,2\n0.5,1,1,0\n")
        ds = hx.load_csv(f)
        assert ds.n == 3 and ds.p == 2
        assert ds.times[2] == 0.5

    def test_missing_cells_dropped_with_warning(self, tmp_path):
        f = self._write(tmp_path, "time,status,x1\n1,1,0.5\n2,,0.1\n3,1,\n4,0,1.0\n")
        with pytest.warns(UserWarning, match="dropped 2"):
            ds = hx.load_csv(f)
        assert ds.n == 2

    def test_bad_header(self, tmp_path):
        f = self._write(tmp_path, "t,status,x1\n1,1,0.5\n")
        with pytest.raises(hx.SchemaError, match="header"):
            hx.load_csv(f)

    def test_non_numeric(self, tmp_path):
        f = self._write(tmp_path, "time,status,x1\n1,1,abc\n2,0,1\n")
        with pytest.raises(hx.SchemaError, match="non-numeric"):
            hx.load_csv(f)
