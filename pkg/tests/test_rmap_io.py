import numpy as np
import pytest
from PIL import Image

from radiodiff.errors import FormatError, ParameterError
from radiodiff.grids import BuildingLayout, RadioMap, SampleSet
from radiodiff.rmap_io import (import_grayscale, load_map, load_samples,
                               save_map, save_samples)


class TestMapContainer:
    def test_float_map_roundtrip_exact(self, tmp_path, rng):
        path = str(tmp_path / "m.rmap")
        values = rng.uniform(0, 1, (13, 7)).astype(np.float32).astype(np.float64)
        save_map(path, RadioMap(values))
        loaded = load_map(path)
        assert isinstance(loaded, RadioMap)
        assert np.array_equal(loaded.values, values)

    def test_layout_roundtrip_exact(self, tmp_path, rng):
        path = str(tmp_path / "l.rmap")
        occ = (rng.random((9, 11)) < 0.3).astype(np.uint8)
        save_map(path, BuildingLayout(occ))
        loaded = load_map(path)
        assert isinstance(loaded, BuildingLayout)
        assert np.array_equal(loaded.occupancy, occ)

    def test_rewrite_is_byte_identical(self, tmp_path, rng):
        a, b = str(tmp_path / "a.rmap"), str(tmp_path / "b.rmap")
        m = RadioMap(rng.uniform(0, 1, (8, 8)).astype(np.float32))
        save_map(a, m)
        save_map(b, load_map(a))
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_bad_magic_offset_zero(self, tmp_path):
        path = tmp_path / "x.rmap"
        good = self._blob(tmp_path)
        path.write_bytes(b"XXXX" + good[4:])
        with pytest.raises(FormatError) as err:
            load_map(str(path))
        assert err.value.offset == 0

    def test_bad_version_offset(self, tmp_path):
        path = tmp_path / "x.rmap"
        good = bytearray(self._blob(tmp_path))
        good[4] = 99
        path.write_bytes(bytes(good))
        with pytest.raises(FormatError) as err:
            load_map(str(path))
        assert err.value.offset == 4

    def test_bad_dtype_offset(self, tmp_path):
        path = tmp_path / "x.rmap"
        good = bytearray(self._blob(tmp_path))
        good[13] = 7
        path.write_bytes(bytes(good))
        with pytest.raises(FormatError) as err:
            load_map(str(path))
        assert err.value.offset == 13

    def test_truncated_payload_offset_at_end(self, tmp_path):
        path = tmp_path / "x.rmap"
        good = self._blob(tmp_path)
        path.write_bytes(good[:-5])
        with pytest.raises(FormatError) as err:
            load_map(str(path))
        assert err.value.offset == len(good) - 5

    @staticmethod
    def _blob(tmp_path):
        ref = str(tmp_path / "ref.rmap")
        save_map(ref, RadioMap(np.full((4, 4), 0.5)))
        return open(ref, "rb").read()


class TestSampleCsv:
    def test_roundtrip(self, tmp_path):
        path = str(tmp_path / "s.csv")
        s = SampleSet.from_entries(16, 16, [(0, 1, 0.25), (5, 9, 0.75)])
        save_samples(path, s)
        text = open(path).read()
        assert text.splitlines()[0] == "row,col,rss"
        back = load_samples(path, 16, 16)
        assert back.entries() == s.entries()

    def test_empty_set(self, tmp_path):
        path = str(tmp_path / "s.csv")
        save_samples(path, SampleSet.from_entries(4, 4, []))
        assert load_samples(path, 4, 4).k == 0

    def test_out_of_bounds_on_smaller_grid(self, tmp_path):
        path = str(tmp_path / "s.csv")
        save_samples(path, SampleSet.from_entries(16, 16, [(10, 10, 0.5)]))
        with pytest.raises(IndexError):
            load_samples(path, 8, 8)


class TestImportGrayscale:
    def test_eight_bit_scaling(self, tmp_path):
        path = str(tmp_path / "g.png")
        arr = np.array([[0, 128], [255, 64]], dtype=np.uint8)
        Image.fromarray(arr, mode="L").save(path)
        m = import_grayscale(path, -90.0, 0.0)
        assert isinstance(m, RadioMap)
        assert m.values[0, 0] == 0.0
        assert m.values[1, 0] == 1.0
        assert abs(m.values[0, 1] - 128 / 255) < 1e-12

    def test_sixteen_bit_scaling(self, tmp_path):
        path = str(tmp_path / "g16.png")
        arr = np.array([[0, 65535]], dtype=np.uint16)
        Image.fromarray(arr).save(path)
        m = import_grayscale(path, -90.0, 0.0)
        assert m.values[0, 0] == 0.0 and m.values[0, 1] == 1.0

    def test_window_validation(self, tmp_path):
        path = str(tmp_path / "g.png")
        Image.fromarray(np.zeros((2, 2), np.uint8), mode="L").save(path)
        with pytest.raises(ParameterError):
            import_grayscale(path, 0.0, 0.0)
