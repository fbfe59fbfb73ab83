"""The compiled kernels must agree bit-for-bit with the numpy reference."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudoloc import kernels

ref = kernels.reference
comp = kernels.compiled
needs_compiled = pytest.mark.skipif(comp is None, reason="compiled extension not built")


def cloud(seed, n, dup=False):
    r = np.random.default_rng(seed)
    pc = r.normal(size=(n, 3))
    if dup and n > 3:
        pc[1] = pc[0]
        pc[3] = pc[2]
    return pc


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 80), st.booleans(), st.data())
def test_fps_parity(seed, n, dup, data):
    pc = cloud(seed, n, dup)
    m = data.draw(st.integers(1, n))
    start = data.draw(st.integers(0, n - 1))
    np.testing.assert_array_equal(comp.farthest_point_sample(pc, m, start), ref.farthest_point_sample(pc, m, start))


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 80), st.floats(0.05, 3.0), st.integers(1, 20), st.data())
def test_ball_query_parity(seed, n, radius, k, data):
    pc = cloud(seed, n, dup=True)
    cidx = np.array(data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=10)), dtype=np.int64)
    np.testing.assert_array_equal(comp.ball_query(pc, cidx, radius, k), ref.ball_query(pc, cidx, radius, k))


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 30), st.integers(1, 30), st.sampled_from([3, 5, 7, 11]))
def test_box_filter_parity(seed, h, w, ks):
    r = np.random.default_rng(seed)
    depth = r.uniform(0.1, 5.0, size=(h, w))
    valid = r.random((h, w)) > 0.2
    np.testing.assert_array_equal(
        comp.box_filter_valid(depth, valid, ks), ref.box_filter_valid(depth, valid, ks)
    )


@pytest.mark.parametrize("impl", [ref, comp] if comp is not None else [ref], ids=lambda m: m.__name__)
def test_fps_distinct_even_with_duplicates(impl):
    pc = np.zeros((6, 3))
    pc[5] = 1.0
    idx = impl.farthest_point_sample(pc, 6, 0)
    assert sorted(idx.tolist()) == list(range(6))
    # ties at distance 0 resolve to the lowest remaining index
    assert idx.tolist() == [0, 5, 1, 2, 3, 4]


@pytest.mark.parametrize("impl", [ref, comp] if comp is not None else [ref], ids=lambda m: m.__name__)
def test_box_filter_output_zero_at_invalid(impl):
    depth = np.ones((4, 4))
    valid = np.ones((4, 4), dtype=bool)
    valid[2, 2] = False
    out = impl.box_filter_valid(depth, valid, 3)
    assert out[2, 2] == 0.0
    assert np.all(out[valid] == 1.0)
