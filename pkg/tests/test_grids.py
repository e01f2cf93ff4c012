import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radiodiff.errors import ParameterError, ShapeError
from radiodiff.grids import (BuildingLayout, Condition, EnrichedSampleSet,
                             RadioMap, SampleSet, check_same_shape,
                             denormalize_rss, masked_overwrite, normalize_rss)


def _samples(height=8, width=8, entries=((1, 2, 0.5), (3, 4, 0.25))):
    return SampleSet.from_entries(height, width, entries)


class TestRadioMap:
    def test_values_copied_to_float64(self):
        arr = np.zeros((4, 5), dtype=np.float32)
        m = RadioMap(arr)
        assert m.values.dtype == np.float64
        assert m.shape == (4, 5) and m.height == 4 and m.width == 5

    def test_rejects_out_of_range(self):
        with pytest.raises(ParameterError):
            RadioMap(np.full((3, 3), 1.5))
        with pytest.raises(ParameterError):
            RadioMap(-0.1 * np.ones((3, 3)))

    def test_rejects_non_2d(self):
        with pytest.raises(ShapeError):
            RadioMap(np.zeros((2, 2, 2)))

    def test_masked_zeroes_buildings(self):
        occ = np.zeros((3, 3), np.uint8)
        occ[1, 1] = 1
        m = RadioMap(np.full((3, 3), 0.7)).masked(BuildingLayout(occ))
        assert m.values[1, 1] == 0.0
        assert m.values[0, 0] == 0.7


class TestBuildingLayout:
    def test_free_cells_complement_occupancy(self):
        occ = np.zeros((4, 4), np.uint8)
        occ[0, :] = 1
        lay = BuildingLayout(occ)
        free = lay.free_cells()
        assert len(free) == 12
        assert not occ[free[:, 0], free[:, 1]].any()
        assert lay.free_fraction == 12 / 16

    def test_rejects_non_binary(self):
        with pytest.raises(ParameterError):
            BuildingLayout(np.full((2, 2), 2, dtype=np.uint8))


class TestSampleSet:
    def test_dense_and_mask_roundtrip(self):
        s = _samples()
        dense, mask = s.dense(), s.mask()
        assert dense[1, 2] == 0.5 and dense[3, 4] == 0.25
        assert mask.sum() == 2
        assert np.all((dense != 0) <= (mask == 1))
        back = SampleSet.from_entries(8, 8, s.entries())
        assert np.array_equal(back.rows, s.rows)
        assert np.array_equal(back.rss, s.rss)

    def test_duplicate_locations_rejected(self):
        with pytest.raises(ParameterError):
            _samples(entries=((1, 1, 0.1), (1, 1, 0.2)))

    def test_out_of_bounds_rejected(self):
        with pytest.raises(IndexError):
            _samples(entries=((8, 0, 0.1),))

    def test_value_range_enforced(self):
        with pytest.raises(ParameterError):
            _samples(entries=((0, 0, 1.1),))

    def test_empty_set_allowed(self):
        s = SampleSet.from_entries(4, 4, [])
        assert s.k == 0 and len(s) == 0
        assert s.dense().sum() == 0

    def test_check_off_buildings(self):
        occ = np.zeros((8, 8), np.uint8)
        occ[1, 2] = 1
        with pytest.raises(ParameterError):
            _samples().check_off_buildings(BuildingLayout(occ))


class TestNormalization:
    @given(st.floats(-120, -20), st.floats(1.0, 80.0),
           st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_inverse_on_interior(self, lo, span, seed):
        hi = lo + span
        raw = np.random.default_rng(seed).uniform(lo, hi, (6, 6))
        m = normalize_rss(raw, lo, hi)
        assert m.values.min() >= 0.0 and m.values.max() <= 1.0
        back = denormalize_rss(m, lo, hi)
        assert np.allclose(back, raw, atol=1e-9 * span)

    def test_clipping_outside_window(self):
        raw = np.array([[-200.0, 0.0]])
        m = normalize_rss(raw, -100.0, -50.0)
        assert m.values[0, 0] == 0.0 and m.values[0, 1] == 1.0

    def test_degenerate_window_rejected(self):
        with pytest.raises(ParameterError):
            normalize_rss(np.zeros((2, 2)), -50.0, -50.0)


class TestMaskedOverwrite:
    def test_overwrites_only_sample_cells(self):
        base = RadioMap(np.full((8, 8), 0.9))
        out = masked_overwrite(base, _samples())
        assert out.values[1, 2] == 0.5
        assert out.values[0, 0] == 0.9

    def test_idempotent(self):
        base = RadioMap(np.full((8, 8), 0.9))
        s = _samples()
        once = masked_overwrite(base, s)
        twice = masked_overwrite(once, s)
        assert np.array_equal(once.values, twice.values)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            masked_overwrite(RadioMap(np.zeros((4, 4))), _samples(8, 8))


class TestEnrichedSampleSet:
    def _es(self):
        return EnrichedSampleSet(
            8, 8,
            rows=[0, 1, 2], cols=[0, 1, 2], rss=[0.1, 0.2, 0.3],
            origin=["measured", "critical", "random"],
        )

    def test_by_origin_partitions_entries(self):
        es = self._es()
        assert len(es) == 3
        total = sum(len(es.by_origin(o)) for o in es.ORIGINS)
        assert total == 3
        assert es.by_origin("measured").tolist() == [[0, 0]]

    def test_unknown_origin_rejected(self):
        with pytest.raises(ParameterError):
            EnrichedSampleSet(4, 4, [0], [0], [0.5], ["guessed"])

    def test_duplicate_cells_rejected(self):
        with pytest.raises(ParameterError):
            EnrichedSampleSet(4, 4, [0, 0], [1, 1], [0.5, 0.6],
                              ["measured", "random"])


class TestCondition:
    def test_channels_stack_occupancy_then_samples(self):
        occ = np.zeros((8, 8), np.uint8)
        occ[0, 0] = 1
        es = EnrichedSampleSet(8, 8, [1], [1], [0.4], ["measured"])
        cond = Condition(BuildingLayout(occ), es)
        ch = cond.channels()
        assert ch.shape == (2, 8, 8)
        assert ch[0, 0, 0] == 1.0 and ch[1, 1, 1] == 0.4

    def test_shape_mismatch_rejected(self):
        es = EnrichedSampleSet(4, 4, [], [], [], [])
        with pytest.raises(ShapeError):
            Condition(BuildingLayout(np.zeros((8, 8), np.uint8)), es)


def test_check_same_shape_mixed_types():
    occ = BuildingLayout(np.zeros((5, 6), np.uint8))
    m = RadioMap(np.zeros((5, 6)))
    assert check_same_shape(occ, m) == (5, 6)
    with pytest.raises(ShapeError):
        check_same_shape(occ, RadioMap(np.zeros((6, 5))))
