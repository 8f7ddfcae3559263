import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiretapbc.hull import (SWEEP_LAMBDAS, RateRegion, constraint_support, constraint_vertices,
                            hausdorff, support, support_gap)


def test_unit_square_support():
    sq = RateRegion([(1, 1)])
    assert support(sq, 1.0) == pytest.approx(2.0)
    assert support(sq, 0.0) == pytest.approx(1.0)
    assert support(sq, math.inf) == pytest.approx(1.0)


def test_lambda_zero_is_max_r1():
    reg = RateRegion([(0.2, 0.9), (0.7, 0.1), (0.5, 0.5)])
    assert support(reg, 0.0) == pytest.approx(0.7)


def test_frontier_sorted_and_collinear_points_dropped():
    reg = RateRegion([(0, 1), (0.5, 0.5), (1, 0), (0.2, 0.2)])
    h = reg.hull
    assert np.all(np.diff(h[:, 0]) >= 0)
    assert not any(np.allclose(v, (0.5, 0.5)) for v in h)


def test_negative_coordinates_clamped():
    reg = RateRegion([(-1e-13, 0.4)])
    assert reg.hull.min() >= 0.0


def test_infeasible_region_contributes_nothing():
    a = RateRegion([(0.3, 0.3)])
    u = RateRegion.union([a, RateRegion.infeasible("empty")])
    assert hausdorff(u, a) == pytest.approx(0.0)


def test_constraint_polygon():
    assert constraint_support(1.0, 1.0, 1.5, 1.0) == pytest.approx(1.5)
    v = constraint_vertices(1.0, 1.0, 1.5)
    reg = RateRegion(v)
    assert reg.contains((0.5, 1.0)) and not reg.contains((0.8, 0.8))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_hull_idempotent_and_downward_closed(seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((12, 2))
    reg = RateRegion(pts)
    again = RateRegion(reg.hull)
    assert np.allclose(again.hull, reg.hull)
    for p in pts:
        assert reg.contains(p)
        assert reg.contains(p * rng.random(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_union_support_is_max(seed):
    rng = np.random.default_rng(seed)
    a, b = RateRegion(rng.random((5, 2))), RateRegion(rng.random((5, 2)))
    u = RateRegion.union([a, b])
    for lam in SWEEP_LAMBDAS:
        assert support(u, lam) == pytest.approx(max(support(a, lam), support(b, lam)), abs=1e-12)
    assert support_gap(a, u) <= 1e-12
