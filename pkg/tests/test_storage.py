import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pemdesign.storage import StorageLink


def _chronological_reference(net_flow, dt_hours, mapping, start):
    """Plain step-by-step inventory over the whole year."""
    level, out = start, []
    for d in mapping:
        for q in net_flow[d]:
            level += q * dt_hours * 3600.0
            out.append(level)
    return np.array(out)


def test_superposition_matches_loop(rng):
    k, n, days = 3, 24, 20
    net = rng.normal(0, 1, (k, n))
    mapping = rng.integers(0, k, days)
    link = StorageLink.from_dispatch(net, 1.0, mapping, start_level=500.0)
    ref = _chronological_reference(net, 1.0, mapping, 500.0)
    assert np.allclose(link.chronological(), ref, rtol=1e-12, atol=0)
    assert np.allclose(link.continuity_gaps()[:-1], 0.0, atol=1e-9)


def test_wrap_residual_zero_for_balanced_year():
    net = np.array([[1.0, -1.0], [2.0, -1.0], [-1.0, 0.0]])
    mapping = np.array([0, 1, 2, 0])  # deltas 0 + 1 - 1 + 0 = 0
    link = StorageLink.from_dispatch(net, 1.0, mapping, start_level=0.0)
    assert link.wrap_residual() == pytest.approx(0.0, abs=1e-9)
    assert link.continuity_gaps() == pytest.approx(np.zeros(4), abs=1e-9)


def test_bound_violation():
    net = np.array([[1.0, 1.0]])
    link = StorageLink.from_dispatch(net, 1.0, [0], start_level=0.0, capacity=3600.0)
    assert link.bound_violation() == pytest.approx(3600.0)


def test_level_shape_checked():
    with pytest.raises(ValueError):
        StorageLink(np.zeros((1, 3)), np.zeros(2), np.zeros(3, int), 1.0)


@settings(max_examples=60, deadline=None)
@given(net=arrays(float, (2, 8), elements=st.floats(-5, 5)),
       mapping=arrays(np.int64, 15, elements=st.integers(0, 1)),
       start=st.floats(0, 1e5))
def test_superposition_property(net, mapping, start):
    link = StorageLink.from_dispatch(net, 0.5, mapping, start_level=start)
    ref = _chronological_reference(net, 0.5, mapping, start)
    assert np.allclose(link.chronological(), ref, rtol=1e-10, atol=1e-7)
