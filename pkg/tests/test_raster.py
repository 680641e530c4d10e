import numpy as np
import pytest
from hypothesis import given, strategies as st

from fieldseg.errors import InvariantError
from fieldseg.raster import (
    BinaryMask,
    GeoTransform,
    InstanceMap,
    NoLabelMask,
    Raster,
    TileTensor,
    threshold,
)


def make_prob(values):
    a = np.asarray(values, dtype=np.float32)
    return Raster(a[:, :, None], dtype="f32")


class TestThreshold:
    def test_all_zero_input(self):
        mask = threshold(make_prob(np.zeros((4, 4))), 0.5)
        assert not mask.data.any()

    def test_direct_comparison(self):
        mask = threshold(make_prob([[0.4, 0.5], [0.6, 0.49]]), 0.5)
        assert mask.data.tolist() == [[0, 1], [1, 0]]

    def test_zero_threshold_all_ones(self):
        mask = threshold(make_prob(np.random.rand(5, 5)), 0.0)
        assert mask.data.all()

    def test_rejects_multiband(self):
        r = Raster(np.zeros((3, 3, 2), dtype=np.float32), dtype="f32")
        with pytest.raises(InvariantError):
            threshold(r, 0.5)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvariantError):
            threshold(make_prob([[np.nan, 0.0], [0.0, 0.0]]), 0.5)

    @given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2**32 - 1))
    def test_monotone_in_threshold(self, t1, t2, seed):
        lo, hi = sorted((t1, t2))
        vals = np.random.default_rng(seed).random((6, 6)).astype(np.float32)
        m_lo = threshold(make_prob(vals), lo).data
        m_hi = threshold(make_prob(vals), hi).data
        # raising t never turns a 0 into a 1
        assert not (m_hi & ~m_lo).any()


class TestInvariants:
    def test_mask_rejects_non_binary(self):
        with pytest.raises(InvariantError):
            BinaryMask(np.array([[0, 2]], dtype=np.uint8))

    def test_nolabel_rejects_non_binary(self):
        with pytest.raises(InvariantError):
            NoLabelMask(np.array([[3]], dtype=np.uint8))

    def test_raster_rejects_zero_dims(self):
        with pytest.raises(InvariantError):
            Raster(np.zeros((0, 3, 1), dtype=np.float32), dtype="f32")

    def test_raster_rejects_unknown_dtype(self):
        with pytest.raises(InvariantError):
            Raster(np.zeros((2, 2, 1)), dtype="f64")

    def test_tile_rejects_nonfinite(self):
        bad = np.zeros((4, 4, 2, 2), dtype=np.float32)
        bad[0, 0, 0, 0] = np.inf
        with pytest.raises(InvariantError):
            TileTensor(bad)

    def test_tile_rejects_rectangular(self):
        with pytest.raises(InvariantError):
            TileTensor(np.zeros((4, 5, 1, 1), dtype=np.float32))

    def test_instance_map_rejects_negative(self):
        with pytest.raises(InvariantError):
            InstanceMap(np.array([[-1]], dtype=np.int32))

    def test_geotransform_pixel_size(self):
        with pytest.raises(InvariantError):
            GeoTransform(0, 0, -1.0, 1.0)
        with pytest.raises(InvariantError):
            GeoTransform(0, 0, 1.0, 0.0)

    def test_data_is_immutable(self):
        m = BinaryMask(np.zeros((2, 2), dtype=np.uint8))
        with pytest.raises(ValueError):
            m.data[0, 0] = 1


def test_geotransform_roundtrip():
    g = GeoTransform(100.0, 50.0, 10.0, -10.0, "EPSG:32633")
    col, row = g.world_to_pixel(*g.pixel_to_world(3.5, 7.25))
    assert (col, row) == pytest.approx((3.5, 7.25))
