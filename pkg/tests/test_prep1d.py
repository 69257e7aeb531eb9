import numpy as np
import pytest
from scipy.signal import argrelmax

from spectrafuse import prep1d
from conftest import make_spectrum


class TestPipelineConfig:
    def test_option_grid_size_is_2880(self):
        sizes = [len(options) for _, options in prep1d.enumerate_pipeline_axes()]
        assert sizes == [2, 5, 3, 2, 3, 4, 4]
        assert int(np.prod(sizes)) == 2880

    def test_invalid_option_rejected(self):
        with pytest.raises(ValueError):
            prep1d.PipelineConfig(baseline="wavelet")

    def test_json_round_trip(self):
        cfg = prep1d.DEFAULT_FTIR_PIPELINE
        assert prep1d.PipelineConfig.from_dict(cfg.to_dict()) == cfg


class TestAverageReplicates:
    def test_pointwise_mean(self):
        a = make_spectrum([0, 1], [1.0, 2.0])
        b = make_spectrum([0, 1], [3.0, 4.0])
        out = prep1d.average_replicates([a, b])
        assert np.array_equal(out.intensity, [2.0, 3.0])

    def test_single_spectrum_identity(self):
        a = make_spectrum([0, 1], [1.5, 2.5])
        assert np.array_equal(prep1d.average_replicates([a]).intensity, a.intensity)

    def test_matches_naive_summation(self):
        rng = np.random.default_rng(0)
        x = np.arange(50.0)
        specs = [make_spectrum(x, rng.normal(size=50)) for _ in range(3)]
        out = prep1d.average_replicates(specs)
        naive = np.zeros(50)
        for s in specs:
            for i in range(50):
                naive[i] += s.intensity[i]
        naive /= 3.0
        assert np.max(np.abs(out.intensity - naive)) <= 1e-12

    def test_axis_mismatch_rejected(self):
        a = make_spectrum([0, 1], [1.0, 2.0])
        b = make_spectrum([0, 2], [1.0, 2.0])
        with pytest.raises(ValueError):
            prep1d.average_replicates([a, b])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            prep1d.average_replicates([])


class TestSelectRegion:
    def test_raman_window(self):
        x = np.arange(30.0, 3360.0, 2.0)
        s = make_spectrum(x, np.ones_like(x))
        out = prep1d.select_region(s, 600.0, 1800.0)
        assert out.axis.values[0] >= 600.0
        assert out.axis.values[-1] <= 1800.0

    def test_full_window_identity(self, line_spectrum):
        out = prep1d.select_region(line_spectrum, 0.0, 5000.0)
        assert np.array_equal(out.intensity, line_spectrum.intensity)

    def test_inclusive_count_on_unit_grid(self):
        x = np.arange(650.0, 4001.0, 1.0)
        s = make_spectrum(x, np.zeros_like(x))
        out = prep1d.select_region(s, 1000.0, 1250.0)
        assert len(out) == 251

    def test_empty_window_rejected(self, line_spectrum):
        with pytest.raises(ValueError):
            prep1d.select_region(line_spectrum, 10.0, 20.0)


class TestPolynomialBaseline:
    def test_exact_polynomial_gives_zero(self):
        x = np.linspace(650.0, 4000.0, 400)
        y = 2.0 + 0.001 * (x - 650.0) - 1e-7 * (x - 650.0) ** 2
        out = prep1d.baseline_polynomial(make_spectrum(x, y), degree=2)
        assert np.max(np.abs(out.intensity)) <= 1e-8

    def test_constant_gives_zero(self):
        x = np.linspace(650.0, 4000.0, 200)
        out = prep1d.baseline_polynomial(make_spectrum(x, np.full(200, 5.0)))
        assert np.max(np.abs(out.intensity)) <= 1e-8

    def test_flat_base_with_peak_recovered(self):
        # generator-known base: flat 2.0 plus one narrow Gaussian, height 1
        x = np.linspace(650.0, 4000.0, 400)
        center, width = 2325.0, 15.0
        y = 2.0 + np.exp(-0.5 * ((x - center) / width) ** 2)
        out = prep1d.baseline_polynomial(make_spectrum(x, y))
        off_peak = np.abs(x - center) > 5 * width
        assert np.max(np.abs(out.intensity[off_peak])) <= 0.02

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            prep1d.baseline_polynomial(make_spectrum([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), degree=3)


class TestAlsBaseline:
    def test_constant_spectrum_fully_removed(self):
        x = np.linspace(600.0, 1800.0, 200)
        out = prep1d.baseline_als(make_spectrum(x, np.full(200, 3.0)))
        assert np.max(np.abs(out.intensity)) <= 1e-8

    def test_flat_base_with_narrow_peak(self):
        x = np.linspace(0.0, 10.0, 200)
        y = 1.0 + 10.0 * np.exp(-0.5 * ((x - 5.0) / 0.15) ** 2)
        out = prep1d.baseline_als(make_spectrum(x + 600.0, y))
        off = np.abs(x - 5.0) > 1.0
        assert np.max(np.abs(out.intensity[off])) < 0.05
        peak = out.intensity[np.argmax(y)]
        assert abs(peak - 10.0) <= 1.0

    def test_banded_solver_matches_dense_solve(self):
        # dual route: banded Cholesky vs generic dense solve of the same system
        rng = np.random.default_rng(42)
        n = 50
        y = rng.normal(size=n) + np.linspace(0.0, 3.0, n)
        w = rng.uniform(0.01, 1.0, n)
        lam = 100.0
        z = prep1d.whittaker_solve(y, w, lam)
        D = np.diff(np.eye(n), 2, axis=0)
        dense = np.linalg.solve(np.diag(w) + lam * D.T @ D, w * y)
        assert np.max(np.abs(z - dense)) <= 1e-9

    def test_stationarity_of_final_system(self):
        x = np.linspace(0.0, 10.0, 200)
        y = 1.0 + 0.1 * x + 10.0 * np.exp(-0.5 * ((x - 5.0) / 0.15) ** 2)
        z, w = prep1d.als_baseline(y)
        n = y.size
        D = np.diff(np.eye(n), 2, axis=0)
        A = np.diag(w) + prep1d.ALS_LAM * D.T @ D
        assert np.max(np.abs(A @ z - w * y)) <= 1e-8

    def test_parameter_validation(self):
        y = np.ones(10)
        with pytest.raises(ValueError):
            prep1d.als_baseline(y, lam=-1.0)
        with pytest.raises(ValueError):
            prep1d.als_baseline(y, p=0.7)
        with pytest.raises(ValueError):
            prep1d.als_baseline(np.array([1.0, np.inf, 1.0]))


class TestSnv:
    def test_analytic_three_points(self):
        out = prep1d.snv(make_spectrum([1, 2, 3], [1.0, 2.0, 3.0]))
        root = 1.0 / np.sqrt(2.0 / 3.0)
        assert np.allclose(out.intensity, [-root, 0.0, root], atol=1e-12)

    def test_affine_invariance(self):
        rng = np.random.default_rng(1)
        x = np.arange(80.0)
        y = rng.normal(size=80)
        base = prep1d.snv(make_spectrum(x, y)).intensity
        shifted = prep1d.snv(make_spectrum(x, 3.7 * y + 11.0)).intensity
        assert np.max(np.abs(base - shifted)) <= 1e-12

    def test_constant_rejected(self):
        with pytest.raises(ValueError, match="constant"):
            prep1d.snv(make_spectrum([1, 2, 3], [4.0, 4.0, 4.0]))

    def test_output_moments(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            y = rng.normal(loc=rng.uniform(-5, 5), scale=rng.uniform(0.1, 10), size=120)
            out = prep1d.snv(make_spectrum(np.arange(120.0), y)).intensity
            assert abs(np.mean(out)) <= 1e-12
            assert abs(np.std(out) - 1.0) <= 1e-12


class TestSavitzkyGolay:
    def test_second_derivative_of_square(self):
        x = np.linspace(0.0, 10.0, 101)
        s = make_spectrum(x + 100.0, x**2)
        out = prep1d.savitzky_golay(s, deriv=2)
        assert np.max(np.abs(out.intensity[5:-5] - 2.0)) <= 1e-8

    def test_polynomial_reproduced_exactly(self):
        x = np.linspace(0.0, 10.0, 101)
        y = 0.3 * x**3 - x + 2.0
        out = prep1d.savitzky_golay(make_spectrum(x + 100.0, y), deriv=0)
        assert np.max(np.abs(out.intensity[5:-5] - y[5:-5])) <= 1e-9

    def test_noise_variance_reduced(self):
        rng = np.random.default_rng(5)
        y = rng.normal(size=500)
        out = prep1d.savitzky_golay(make_spectrum(np.arange(500.0), y), deriv=0)
        assert np.var(out.intensity) < np.var(y)

    def test_derivatives_match_finite_differences(self):
        x = np.linspace(0.0, 10.0, 401)
        y = np.sin(x)
        h = x[1] - x[0]
        d1 = prep1d.savitzky_golay(make_spectrum(x + 100.0, y), deriv=1).intensity
        fd1 = (y[2:] - y[:-2]) / (2 * h)
        rel = np.abs(d1[1:-1] - fd1) / np.maximum(np.abs(fd1), 1e-3)
        assert np.max(rel[20:-20]) <= 0.01

    def test_non_uniform_axis_rejected(self):
        x = np.array([0.0, 1.0, 2.0, 3.5, 4.0] + list(np.arange(5.0, 20.0)))
        with pytest.raises(ValueError, match="uniform"):
            prep1d.savitzky_golay(make_spectrum(x, np.ones(x.size)))

    def test_window_validation(self):
        s = make_spectrum(np.arange(30.0), np.ones(30))
        with pytest.raises(ValueError):
            prep1d.savitzky_golay(s, window=10)
        with pytest.raises(ValueError):
            prep1d.savitzky_golay(s, window=3, polyorder=3)


class TestMovingAverage:
    def test_constant_unchanged(self):
        out = prep1d.moving_average(make_spectrum([0, 1, 2], [1.0, 1.0, 1.0]), window=3)
        assert np.array_equal(out.intensity, [1.0, 1.0, 1.0])

    def test_shrinking_edges(self):
        out = prep1d.moving_average(make_spectrum([0, 1, 2], [0.0, 3.0, 0.0]), window=3)
        assert np.array_equal(out.intensity, [1.5, 1.0, 1.5])

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(6)
        y = rng.normal(size=73)
        window = 9
        half = window // 2
        naive = np.empty_like(y)
        for i in range(y.size):
            lo, hi = max(0, i - half), min(y.size - 1, i + half)
            naive[i] = np.mean(y[lo:hi + 1])
        out = prep1d.moving_average(make_spectrum(np.arange(73.0), y), window=window)
        assert np.max(np.abs(out.intensity - naive)) <= 1e-12

    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            prep1d.moving_average(make_spectrum([0, 1, 2], [1.0, 1.0, 1.0]), window=2)


class TestDerivativeBlock:
    def test_first_derivative_of_line(self):
        x = np.linspace(0.0, 10.0, 101)
        v = prep1d.derivative_block(make_spectrum(x + 100.0, 3.0 * x + 1.0), "first")
        assert np.max(np.abs(v[5:-5] - 3.0)) <= 1e-8

    def test_concatenation_doubles_length(self):
        x = np.linspace(0.0, 10.0, 101)
        v = prep1d.derivative_block(make_spectrum(x, np.sin(x)), "first_and_second")
        assert v.size == 202

    def test_second_equals_direct_sg(self):
        x = np.linspace(0.0, 10.0, 101)
        s = make_spectrum(x, np.sin(x))
        v = prep1d.derivative_block(s, "second")
        direct = prep1d.savitzky_golay(s, deriv=2).intensity
        assert np.max(np.abs(v - direct)) <= 1e-12


class TestNormalize:
    def test_l2(self):
        assert np.allclose(prep1d.normalize(np.array([3.0, 4.0]), "l2"), [0.6, 0.8], atol=0)

    def test_max(self):
        assert np.allclose(prep1d.normalize(np.array([2.0, -2.0]), "max"), [1.0, -1.0], atol=0)

    def test_area_postcondition(self):
        rng = np.random.default_rng(7)
        v = rng.normal(size=64)
        dx = 0.72
        out = prep1d.normalize(v, "area", dx=dx)
        assert abs(np.sum(np.abs(out)) * dx - 1.0) <= 1e-12

    def test_zero_denominator_rejected(self):
        with pytest.raises(ValueError):
            prep1d.normalize(np.zeros(4), "l2")


class TestApplyPipeline:
    def _records(self, n=2, seed=0):
        rng = np.random.default_rng(seed)
        x = np.arange(650.0, 4001.0, 10.0)
        return x, [make_spectrum(x, 1.0 + rng.normal(size=x.size) * 0.1
                                 + np.exp(-0.5 * ((x - 1650) / 30) ** 2))
                   for _ in range(n)]

    def test_all_none_full_region_is_identity(self):
        x, recs = self._records(n=1)
        cfg = prep1d.PipelineConfig(replicate_mode="keep_all")
        (vec,) = prep1d.apply_pipeline(cfg, recs)
        assert np.array_equal(vec, recs[0].intensity)

    def test_selected_ftir_pipeline_runs(self):
        _, recs = self._records(n=3)
        vecs = prep1d.apply_pipeline(prep1d.DEFAULT_FTIR_PIPELINE, recs)
        assert len(vecs) == 3
        assert all(np.all(np.isfinite(v)) for v in vecs)

    def test_average_yields_one_vector(self):
        _, recs = self._records(n=3)
        cfg = prep1d.PipelineConfig(replicate_mode="average")
        assert len(prep1d.apply_pipeline(cfg, recs)) == 1

    def test_concat_derivative_doubles_width(self):
        x, recs = self._records(n=1)
        cfg = prep1d.PipelineConfig(replicate_mode="keep_all", derivative="first_and_second")
        (vec,) = prep1d.apply_pipeline(cfg, recs)
        assert vec.size == 2 * x.size

    def test_feature_names_match_output_width(self):
        x, recs = self._records(n=1)
        for derivative in prep1d.DERIVATIVES:
            for region in ("full_650_4000", "nucleic_1000_1250"):
                cfg = prep1d.PipelineConfig(replicate_mode="keep_all",
                                            region=region, derivative=derivative)
                (vec,) = prep1d.apply_pipeline(cfg, recs)
                names = prep1d.pipeline_feature_names(cfg, recs[0].axis)
                assert len(names) == vec.size

    def test_pipeline_is_pure(self):
        _, recs = self._records(n=2)
        cfg = prep1d.PipelineConfig(replicate_mode="keep_all", baseline="als",
                                    scatter="snv", smoothing="savitzky_golay",
                                    derivative="second", normalization="l2")
        a = prep1d.apply_pipeline(cfg, recs)
        b = prep1d.apply_pipeline(cfg, recs)
        for va, vb in zip(a, b):
            assert np.array_equal(va, vb)


class TestRamanPipeline:
    def _raman(self, with_ramp: bool, seed=0):
        x = np.arange(30.0, 3360.0, 2.0)
        peaks = [(1003.0, 7.0, 1.0), (1340.0, 12.0, 0.5), (1655.0, 15.0, 0.8)]
        y = np.zeros_like(x)
        for c, w, a in peaks:
            y += a * np.exp(-0.5 * ((x - c) / w) ** 2)
        if with_ramp:
            y = y + 6.0 * np.exp(-(x - 30.0) / 1200.0)
        return make_spectrum(x, y)

    def test_snv_postcondition(self):
        v = prep1d.raman_pipeline(self._raman(with_ramp=True))
        assert abs(np.mean(v)) <= 1e-10
        assert abs(np.std(v) - 1.0) <= 1e-10

    def test_flat_spectrum_rejected_by_snv(self):
        x = np.arange(30.0, 3360.0, 2.0)
        with pytest.raises(ValueError):
            prep1d.raman_pipeline(make_spectrum(x, np.full(x.size, 2.0)))

    def test_peak_positions_survive_fluorescence_ramp(self):
        clean = prep1d.raman_pipeline(self._raman(with_ramp=False))
        ramped = prep1d.raman_pipeline(self._raman(with_ramp=True))
        clean_peaks = set(argrelmax(clean, order=20)[0])
        ramped_peaks = set(argrelmax(ramped, order=20)[0])
        majors = [i for i in clean_peaks if clean[i] > 1.0]
        assert majors
        for i in majors:
            assert any(abs(i - j) <= 2 for j in ramped_peaks)
