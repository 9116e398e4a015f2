import numpy as np
import pytest

from plexindex import KeyWidth, RadixCostTracker, SplineModel, build_radix_table, ceil_log2
from plexindex.radix_table import lambdas_from_cdf

from oracles import linear_scan_segment, offline_radix_lambda

W4 = KeyWidth(4)
WORKED_KEYS = np.array([0, 5, 6, 7, 8, 10, 11, 15], dtype=np.uint64)


def _model(keys, width=W4):
    keys = np.asarray(keys, dtype=np.uint64)
    return SplineModel(keys, np.arange(len(keys), dtype=np.uint64), 1, len(keys), width)


def test_offsets_worked_example():
    table = build_radix_table(_model(WORKED_KEYS), 1)
    assert table.offsets.tolist() == [0, 4, 8]
    assert table.size_bytes == 3 * 4


def test_full_width_radix_gives_singleton_buckets():
    table = build_radix_table(_model(WORKED_KEYS), 4)
    sizes = np.diff(table.offsets.astype(np.int64))
    assert sizes.max() == 1
    assert sizes.sum() == 8


def test_single_bucket_when_msb_shared():
    low = _model([0b0001, 0b0011, 0b0110])
    assert build_radix_table(low, 1).offsets.tolist() == [0, 3, 3]
    high = _model([0b1000, 0b1010, 0b1111])
    assert build_radix_table(high, 1).offsets.tolist() == [0, 0, 3]


def test_memory_is_exactly_table_entries():
    rng = np.random.default_rng(2)
    keys = np.unique(rng.integers(0, 1 << 32, 300, dtype=np.uint64))
    model = SplineModel(keys, np.arange(len(keys), dtype=np.uint64), 1, len(keys))
    for r in (1, 3, 8, 12):
        table = build_radix_table(model, r)
        assert len(table.offsets) == (1 << r) + 1
        assert table.size_bytes == ((1 << r) + 1) * 4


def test_lookup_range_covers_segment():
    rng = np.random.default_rng(8)
    for width_bits in (8, 16, 64):
        width = KeyWidth(width_bits)
        hi = 1 << min(width_bits, 62)
        keys = np.unique(rng.integers(0, hi, 64, dtype=np.uint64))
        model = SplineModel(keys, np.arange(len(keys), dtype=np.uint64), 1, len(keys), width)
        for r in (1, 2, 5, min(8, width_bits)):
            table = build_radix_table(model, r)
            for k in rng.integers(0, hi, 200, dtype=np.uint64):
                start, length = table.lookup_range(int(k))
                seg = model.segment_search(start, length, int(k))
                assert seg == linear_scan_segment(keys, int(k))


def _track(keys, width=W4, r_max=3):
    """Feed keys as both data and spline points (one occurrence each)."""
    t = RadixCostTracker(r_max, width)
    for k in keys:
        t.add_key(int(k))
        t.add_spline_point(int(k))
    return t.finalize()


def test_lambda_worked_example():
    lam = _track(WORKED_KEYS)
    assert lam[0] == ceil_log2(8) == 3
    assert lam[1] == 2.0
    assert lam[0] - lam[1] == 1.0


def test_lambda_stuck_when_msb_shared():
    keys = [0b1000, 0b1001, 0b1010, 0b1100, 0b1111]
    lam = _track(keys, r_max=1)
    assert lam[1] == lam[0] == ceil_log2(5)


def test_lambda_zero_index_is_binary_search_cost():
    rng = np.random.default_rng(1)
    keys = np.unique(rng.integers(0, 1 << 40, 123, dtype=np.uint64))
    lam = _track(keys, KeyWidth(), r_max=6)
    assert lam[0] == ceil_log2(len(keys))


def test_streaming_matches_offline_and_diffs_bounded():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(10, 4000))
        data = np.sort(rng.integers(0, 1 << 48, n, dtype=np.uint64))
        cdf_keys = np.unique(data)
        # every third distinct key a spline point, endpoints always
        mask = np.zeros(len(cdf_keys), dtype=bool)
        mask[::3] = True
        mask[0] = mask[-1] = True
        spline_keys = cdf_keys[mask]

        t = RadixCostTracker(10, KeyWidth())
        spline_set = set(int(k) for k in spline_keys)
        counts = np.searchsorted(data, cdf_keys, side="right") - np.searchsorted(data, cdf_keys)
        for k, c in zip(cdf_keys, counts):
            for _ in range(int(c)):
                t.add_key(int(k))
            if int(k) in spline_set:
                t.add_spline_point(int(k))
        lam = t.finalize()
        for r in range(0, 11):
            assert lam[r] == offline_radix_lambda(data, spline_keys, r)
        diffs = lam[:-1] - lam[1:]
        assert np.all(diffs >= 0) and np.all(diffs <= 1.0)


def test_weighted_kernel_matches_streaming_tracker():
    rng = np.random.default_rng(13)
    for _ in range(10):
        n = int(rng.integers(5, 2000))
        data = np.sort(rng.integers(0, 1 << 24, n, dtype=np.uint64))  # duplicates likely
        cdf_keys = np.unique(data)
        cdf_pos = np.searchsorted(data, cdf_keys).astype(np.uint64)
        mask = np.zeros(len(cdf_keys), dtype=bool)
        mask[rng.integers(0, len(cdf_keys), max(1, len(cdf_keys) // 2))] = True
        mask[0] = mask[-1] = True

        t = RadixCostTracker(8, KeyWidth())
        for i, k in enumerate(cdf_keys):
            count = int(cdf_pos[i + 1] - cdf_pos[i]) if i + 1 < len(cdf_keys) else n - int(cdf_pos[i])
            for _ in range(count):
                t.add_key(int(k))
            if mask[i]:
                t.add_spline_point(int(k))
        lam_stream = t.finalize()
        lam_kernel = lambdas_from_cdf(cdf_keys, cdf_pos, mask, n, 8, KeyWidth())
        assert np.array_equal(lam_stream, lam_kernel)


def test_tracker_rejects_out_of_order():
    t = RadixCostTracker(4, KeyWidth(8))
    t.add_key(10)
    with pytest.raises(ValueError):
        t.add_key(9)
    with pytest.raises(ValueError):
        t.add_spline_point(9)


def test_radix_bits_validation():
    model = _model(WORKED_KEYS)
    with pytest.raises(ValueError):
        build_radix_table(model, 0)
    with pytest.raises(ValueError):
        build_radix_table(model, 5)  # width is 4
