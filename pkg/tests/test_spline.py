import numpy as np
import pytest

from plexindex import CdfPoint, KeyWidth, SplineBuilder, SplineModel, build_spline
from plexindex.spline import build_spline_from_arrays

from oracles import linear_scan_segment, max_spline_error

WORKED_KEYS = np.array([0, 5, 6, 7, 8, 10, 11, 15], dtype=np.uint64)


def _cdf(keys):
    return [CdfPoint(int(k), i) for i, k in enumerate(keys)]


def test_perfectly_linear_data_needs_only_endpoints():
    model = build_spline(_cdf(range(1000)), epsilon=4, num_keys=1000)
    assert len(model) == 2
    assert model.point(0) == model.point(0).__class__(0, 0)
    assert (model.point(-1).key, model.point(-1).position) == (999, 999)


def test_single_point_model():
    model = build_spline([CdfPoint(42, 0)], epsilon=1, num_keys=1)
    assert len(model) == 1
    assert model.predict(42) == 0
    assert model.predict(7) == 0
    assert model.interpolate(0, 1000) == 0


def test_lognormal_bound_brute_force():
    rng = np.random.default_rng(5)
    data = np.sort((rng.lognormal(0, 2.0, 10_000) * 2**40).astype(np.uint64))
    cdf_keys = np.unique(data)
    cdf_pos = np.searchsorted(data, cdf_keys).astype(np.uint64)
    model = build_spline_from_arrays(cdf_keys, cdf_pos, 32, len(data))
    assert max_spline_error(model, data) <= 32


@pytest.mark.parametrize("epsilon", [1, 2, 16])
def test_bound_holds_on_rough_data(epsilon):
    rng = np.random.default_rng(epsilon)
    data = np.sort(rng.integers(0, 1 << 20, 4000, dtype=np.uint64))
    keys = np.unique(data)
    pos = np.searchsorted(data, keys).astype(np.uint64)
    model = build_spline_from_arrays(keys, pos, epsilon, len(data))
    assert max_spline_error(model, data) <= epsilon


def test_interpolate_exact_cases():
    model = build_spline([CdfPoint(0, 0), CdfPoint(8, 4)], epsilon=1, num_keys=5)
    assert model.interpolate(0, 0) == 0  # left endpoint
    assert model.interpolate(0, 8) == 4  # right endpoint
    assert model.interpolate(0, 4) == 2  # exact midpoint
    with pytest.raises(IndexError):
        model.interpolate(1, 4)


def test_interpolate_monotone_within_segment():
    model = build_spline([CdfPoint(10, 0), CdfPoint(1000, 777)], epsilon=1, num_keys=778)
    prev = -1
    for k in range(10, 1001, 7):
        cur = model.interpolate(0, k)
        assert cur >= prev
        prev = cur


def test_segment_search_worked_example():
    model = SplineModel(WORKED_KEYS, np.arange(8, dtype=np.uint64), 1, 8, KeyWidth(4))
    assert model.segment_search(0, len(model), 6) == 2
    assert model.segment_search(0, len(model), 0) == 0
    assert model.segment_search(0, len(model), 15) == 6  # clamped to last segment
    assert model.segment_search(0, len(model), 99) == 6


def test_segment_search_matches_linear_scan():
    rng = np.random.default_rng(9)
    for _ in range(50):
        m = int(rng.integers(2, 40))
        keys = np.unique(rng.integers(0, 1 << 16, m, dtype=np.uint64))
        pos = np.arange(len(keys), dtype=np.uint64)
        model = build_spline_from_arrays(keys, pos, 1, len(keys), KeyWidth(16))
        for k in rng.integers(0, 1 << 16, 40, dtype=np.uint64):
            want = linear_scan_segment(model.keys, int(k))
            assert model.segment_search(0, len(model), int(k)) == want


def test_streaming_builder_matches_array_kernel():
    rng = np.random.default_rng(3)
    for trial in range(20):
        n = int(rng.integers(2, 2000))
        hi = (1 << 64) if trial % 2 else (1 << 20)
        keys = np.unique(rng.integers(0, hi, n, dtype=np.uint64))
        pos = np.sort(rng.choice(np.arange(10 * len(keys), dtype=np.uint64),
                                 size=len(keys), replace=False))
        eps = int(rng.integers(1, 64))
        b = SplineBuilder(eps)
        for k, p in zip(keys, pos):
            b.add(int(k), int(p))
        streamed = b.finish(int(pos[-1]) + 1)
        kernel = build_spline_from_arrays(keys, pos, eps, int(pos[-1]) + 1)
        assert np.array_equal(streamed.keys, kernel.keys)
        assert np.array_equal(streamed.positions, kernel.positions)


def test_spline_size_bounds():
    rng = np.random.default_rng(21)
    keys = np.unique(rng.integers(0, 1 << 32, 5000, dtype=np.uint64))
    pos = np.arange(len(keys), dtype=np.uint64)
    model = build_spline_from_arrays(keys, pos, 8, len(keys))
    assert 2 <= len(model) <= len(keys)
    # affine CDF (position linear in key) collapses to the two endpoints
    akeys = (np.arange(2000, dtype=np.uint64) * 5) + 17
    apos = (np.arange(2000, dtype=np.uint64) * 3)
    affine = build_spline_from_arrays(akeys, apos, 1, 3 * 2000)
    assert len(affine) == 2


def test_input_validation():
    with pytest.raises(ValueError, match="empty"):
        build_spline([], epsilon=4, num_keys=0)
    with pytest.raises(ValueError):
        build_spline(_cdf([5, 5]), epsilon=4, num_keys=2)
    with pytest.raises(ValueError):
        SplineBuilder(0)
    b = SplineBuilder(2)
    b.add(10, 0)
    with pytest.raises(ValueError):
        b.add(9, 1)


def test_endpoints_always_knots():
    rng = np.random.default_rng(4)
    keys = np.unique(rng.integers(0, 1 << 30, 500, dtype=np.uint64))
    pos = np.arange(len(keys), dtype=np.uint64)
    model = build_spline_from_arrays(keys, pos, 100, len(keys))
    assert model.keys[0] == keys[0] and model.keys[-1] == keys[-1]
    assert np.all(np.diff(model.keys.astype(object)) > 0)
    assert np.all(np.diff(model.positions.astype(object)) > 0)
