"""Classical interpolators: exactness, oracles, kriging weight constraint."""

from types import SimpleNamespace

import numpy as np
import pytest
from scipy.interpolate import RBFInterpolator

from radiodiff.baselines import (VariogramModel, empirical_variogram,
                                 fit_variogram, kriging_interpolate,
                                 rbf_interpolate, spline_interpolate,
                                 _check_distinct)
from radiodiff.errors import NumericalError, ParameterError
from radiodiff.grids import BuildingLayout, SampleSet


def scattered(rng, h=20, w=20, k=15, layout=None):
    """Samples of a smooth field on free cells."""
    if layout is None:
        layout = BuildingLayout(np.zeros((h, w), dtype=np.int64))
    free = layout.free_cells()
    pick = rng.choice(len(free), size=k, replace=False)
    rows = free[pick, 0]
    cols = free[pick, 1]
    field = 0.5 + 0.3 * np.sin(np.arange(h)[:, None] / 5.0) \
        * np.cos(np.arange(w)[None, :] / 7.0)
    return SampleSet(h, w, rows, cols, field[rows, cols]), layout


class TestExactInterpolation:
    """All methods reproduce the sample values at the sensor cells."""

    @pytest.mark.parametrize("method,kwargs", [
        (rbf_interpolate, {"kernel": "thin_plate"}),
        (rbf_interpolate, {"kernel": "multiquadric"}),
        (spline_interpolate, {}),
        (kriging_interpolate, {}),
    ])
    def test_passes_through_samples(self, rng, method, kwargs):
        samples, layout = scattered(rng)
        est, _ = method(samples, layout, **kwargs)
        got = est.values[samples.rows, samples.cols]
        assert np.abs(got - samples.rss).max() < 1e-6


class TestRbf:
    def test_matches_scipy_thin_plate(self, rng):
        samples, layout = scattered(rng, k=18)
        ours, info = rbf_interpolate(samples, layout, kernel="thin_plate")
        assert info["kernel"] == "thin_plate"
        pts = np.stack([samples.rows, samples.cols], axis=1).astype(float)
        itp = RBFInterpolator(pts, samples.rss, kernel="thin_plate_spline",
                              degree=1)
        h, w = layout.shape
        grid = np.stack(np.meshgrid(np.arange(h), np.arange(w),
                                    indexing="ij"), axis=-1)
        ref = np.clip(itp(grid.reshape(-1, 2).astype(float)).reshape(h, w),
                      0, 1)
        assert np.abs(ours.values - ref).max() < 1e-10

    def test_affine_tail_reproduces_planes(self, rng):
        h = w = 16
        layout = BuildingLayout(np.zeros((h, w), dtype=np.int64))
        plane = 0.2 + 0.02 * np.arange(h)[:, None] \
            + 0.01 * np.arange(w)[None, :]
        cells = rng.choice(h * w, size=10, replace=False)
        samples = SampleSet(h, w, cells // w, cells % w,
                            plane[cells // w, cells % w])
        est, _ = rbf_interpolate(samples, layout, kernel="thin_plate")
        assert np.abs(est.values - plane).max() < 1e-8

    def test_single_sample_constant(self):
        layout = BuildingLayout(np.zeros((8, 8), dtype=np.int64))
        samples = SampleSet(8, 8, np.array([3]), np.array([4]),
                            np.array([0.42]))
        est, _ = rbf_interpolate(samples, layout)
        assert np.allclose(est.values, 0.42, atol=1e-12)

    def test_empty_rejected(self):
        layout = BuildingLayout(np.zeros((8, 8), dtype=np.int64))
        empty = SampleSet(8, 8, np.empty(0, np.int64), np.empty(0, np.int64),
                          np.empty(0))
        with pytest.raises(ParameterError):
            rbf_interpolate(empty, layout)

    def test_unknown_kernel(self, rng):
        samples, layout = scattered(rng)
        with pytest.raises(ParameterError):
            rbf_interpolate(samples, layout, kernel="cubic")

    def test_building_cells_zeroed(self, rng):
        occ = np.zeros((20, 20), dtype=np.int64)
        occ[5:9, 5:9] = 1
        layout = BuildingLayout(occ)
        samples, _ = scattered(rng, layout=layout)
        est, _ = rbf_interpolate(samples, layout)
        assert np.all(est.values[occ == 1] == 0.0)

    def test_range_clipped(self, rng):
        # steep data forces overshoot between samples; output must stay
        # inside the normalized range
        samples, layout = scattered(rng, k=20)
        est, _ = rbf_interpolate(samples, layout)
        assert est.values.min() >= 0.0
        assert est.values.max() <= 1.0


class TestSpline:
    def test_two_points_nearest_fallback(self):
        layout = BuildingLayout(np.zeros((10, 10), dtype=np.int64))
        samples = SampleSet(10, 10, np.array([0, 9]), np.array([0, 9]),
                            np.array([0.2, 0.8]))
        est, info = spline_interpolate(samples, layout)
        assert info["fallback"]
        assert est.values[0, 0] == 0.2
        assert est.values[9, 9] == 0.8
        assert est.values[1, 1] == 0.2    # nearer to (0, 0)
        assert est.values[8, 8] == 0.8

    def test_collinear_points_fall_back(self):
        layout = BuildingLayout(np.zeros((10, 10), dtype=np.int64))
        samples = SampleSet(10, 10, np.full(5, 4), np.arange(5) * 2,
                            np.linspace(0.2, 0.6, 5))
        _, info = spline_interpolate(samples, layout)
        assert info["fallback"]

    def test_general_position_solves(self, rng):
        samples, layout = scattered(rng)
        est, info = spline_interpolate(samples, layout)
        assert not info["fallback"]
        got = est.values[samples.rows, samples.cols]
        assert np.abs(got - samples.rss).max() < 1e-8

    def test_empty_rejected(self):
        layout = BuildingLayout(np.zeros((6, 6), dtype=np.int64))
        empty = SampleSet(6, 6, np.empty(0, np.int64), np.empty(0, np.int64),
                          np.empty(0))
        with pytest.raises(ParameterError):
            spline_interpolate(empty, layout)


class TestVariogramModel:
    def test_zero_lag_is_zero(self):
        for kind in ("exponential", "spherical", "gaussian"):
            assert VariogramModel(kind, 0.1, 1.0, 5.0).gamma(0.0) == 0.0

    def test_practical_range(self):
        m = VariogramModel("exponential", 0.0, 2.0, 8.0)
        assert abs(m.gamma(8.0) - 2.0 * (1 - np.exp(-3.0))) < 1e-12

    def test_spherical_reaches_sill(self):
        m = VariogramModel("spherical", 0.0, 1.5, 6.0)
        assert m.gamma(6.0) == 1.5
        assert m.gamma(60.0) == 1.5

    def test_monotone(self):
        h = np.linspace(0.01, 30, 200)
        for kind in ("exponential", "spherical", "gaussian"):
            g = VariogramModel(kind, 0.05, 1.0, 10.0).gamma(h)
            assert np.all(np.diff(g) >= -1e-12)

    @pytest.mark.parametrize("kw", [
        {"kind": "cubic"}, {"nugget": -0.1}, {"sill": 0.0},
        {"range_": 0.0}, {"nugget": 2.0, "sill": 1.0},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ParameterError):
            VariogramModel(**kw)


class TestEmpiricalVariogram:
    def test_single_pair_by_hand(self):
        samples = SampleSet(10, 10, np.array([0, 0]), np.array([0, 5]),
                            np.array([0.2, 0.6]))
        centers, gammas, counts = empirical_variogram(samples)
        assert len(centers) == 1
        assert centers[0] == 5.0
        assert abs(gammas[0] - 0.5 * 0.4 ** 2) < 1e-15
        assert counts[0] == 1

    def test_pair_count_conservation(self, rng):
        samples, _ = scattered(rng, k=12)
        _, _, counts = empirical_variogram(samples)
        assert counts.sum() == 12 * 11 // 2

    def test_fit_returns_valid_model(self, rng):
        samples, _ = scattered(rng, k=25)
        model = fit_variogram(samples, kind="exponential")
        assert model.kind == "exponential"
        assert model.sill > 0
        assert model.range_ > 0

    def test_fit_fallback_with_few_points(self):
        samples = SampleSet(10, 10, np.array([0, 9]), np.array([0, 9]),
                            np.array([0.2, 0.8]))
        model = fit_variogram(samples)
        assert model.nugget == 0.0
        assert model.sill > 0


class TestKriging:
    def test_weight_sums_hit_unity(self, rng):
        # 32 x 32 >= 1000 estimation cells under the unit-sum constraint
        samples, layout = scattered(rng, h=32, w=32, k=20)
        _, info = kriging_interpolate(samples, layout)
        assert info["max_weight_sum_error"] < 1e-9

    def test_matches_per_cell_solve(self, rng):
        samples, layout = scattered(rng, h=16, w=16, k=10)
        model = VariogramModel("exponential", 0.0, 1.0, 8.0)
        est, _ = kriging_interpolate(samples, layout, model=model)
        pts = np.stack([samples.rows, samples.cols], axis=1).astype(float)
        k = samples.k
        a = np.zeros((k + 1, k + 1))
        a[:k, :k] = model.gamma(np.hypot(pts[:, None, 0] - pts[None, :, 0],
                                         pts[:, None, 1] - pts[None, :, 1]))
        a[:k, k] = 1.0
        a[k, :k] = 1.0
        for r, c in [(0, 0), (7, 9), (15, 15), (3, 12)]:
            d = np.hypot(r - pts[:, 0], c - pts[:, 1])
            rhs = np.concatenate([model.gamma(d), [1.0]])
            w = np.linalg.solve(a, rhs)[:k]
            ref = np.clip(w @ samples.rss, 0.0, 1.0)
            assert abs(est.values[r, c] - ref) < 1e-8

    def test_constant_data_constant_map(self, rng):
        h = w = 12
        layout = BuildingLayout(np.zeros((h, w), dtype=np.int64))
        cells = rng.choice(h * w, size=8, replace=False)
        samples = SampleSet(h, w, cells // w, cells % w, np.full(8, 0.37))
        est, _ = kriging_interpolate(samples, layout)
        assert np.abs(est.values - 0.37).max() < 1e-9

    def test_auto_variogram_info(self, rng):
        samples, layout = scattered(rng)
        _, info = kriging_interpolate(samples, layout)
        assert set(info["variogram"]) == {"kind", "nugget", "sill", "range"}

    def test_needs_two_samples(self):
        layout = BuildingLayout(np.zeros((8, 8), dtype=np.int64))
        one = SampleSet(8, 8, np.array([1]), np.array([1]), np.array([0.5]))
        with pytest.raises(ParameterError):
            kriging_interpolate(one, layout)

    def test_bad_model_argument(self, rng):
        samples, layout = scattered(rng)
        with pytest.raises(ParameterError):
            kriging_interpolate(samples, layout, model="exponential")


class TestDistinctnessGuard:
    def test_duplicate_locations_raise(self):
        # SampleSet rejects duplicates at construction; the solver-level
        # guard stays for externally built inputs
        stub = SimpleNamespace(rows=np.array([2, 2, 5]),
                               cols=np.array([3, 3, 1]))
        with pytest.raises(NumericalError):
            _check_distinct(stub)

    def test_distinct_locations_pass(self):
        stub = SimpleNamespace(rows=np.array([0, 4]), cols=np.array([1, 1]))
        pts, d = _check_distinct(stub)
        assert pts.shape == (2, 2)
        assert d[0, 1] == 4.0
