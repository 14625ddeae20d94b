import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expdyn.core import Parameter, eval_map
from expdyn.errors import BoundaryHit, GammaNotLanding, InsufficientData, OutOfChartedRange
from expdyn.rays import Address, trace_ray
from expdyn.symbolic import (
    SlopeBound,
    StaticPartition,
    build_dynamic_partition,
    dynamic_strip_index,
    exponential_bound,
    fit_slope_bound,
    half_plane_itinerary_check,
    is_exponentially_bounded_prefix,
    itinerary,
    static_strip_index,
    strip_index,
)

TWO_PI = 2 * math.pi


def test_static_fixtures(p2pi):
    assert static_strip_index(StaticPartition(p2pi), 2j * math.pi) == 1
    for lam in [1, 0.25, 2j * math.pi, -0.5 + 0.1j, 1 - 3j]:
        assert static_strip_index(StaticPartition(Parameter(lam)), 0) == 0
    with pytest.raises(BoundaryHit):
        static_strip_index(StaticPartition(Parameter(1)), 1j * math.pi)


def test_dynamic_fixtures(dp):
    assert dynamic_strip_index(dp, 2j * math.pi) == 1
    assert dynamic_strip_index(dp, 0j) == 0


def test_labeling(p2pi, dp):
    sp = StaticPartition(p2pi)
    for k in range(-10, 11):
        z = 1j * TWO_PI * k
        assert static_strip_index(sp, z) == k
        assert dynamic_strip_index(dp, z) == k


def test_itinerary_fixtures(p2pi, dp):
    it = itinerary(p2pi, dp, 0j, 5)
    assert it.symbols == (0, 1, 1, 1, 1) and it.complete and not it.fallback
    assert itinerary(p2pi, dp, 2j * math.pi, 4).symbols == (1, 1, 1, 1)
    assert it.to_json(0j) == {"z": [0.0, 0.0], "symbols": [0, 1, 1, 1, 1], "complete": True}


def test_itinerary_stops_on_escape(p2pi, dp):
    it = itinerary(p2pi, dp, 60.0 + 0.5j, 5)
    assert it.symbols == () and not it.complete


def test_curves_asymptotically_horizontal(dp):
    # far right the k = 0 curve sits at 2 pi * 0 - arg(lam)
    far = dp.curve[dp.curve.real > 20]
    assert np.max(np.abs(far.imag + math.pi / 2)) < 1e-6
    assert np.all(np.diff(far.real) > 0)


@settings(max_examples=300, deadline=None)
@given(st.floats(20, 40), st.floats(-30, 30))
def test_far_right_offset(dp, x, y):
    # R_k is the static strip S_k moved up by pi: both are 2 pi tall and
    # anchored at the same asymptote, but on opposite sides of it
    z = complex(x, y)
    try:
        k = dynamic_strip_index(dp, z)
        s = static_strip_index(StaticPartition(dp.parameter), z - 1j * math.pi)
    except BoundaryHit:
        return
    assert k == s


def test_boundary_refused(dp):
    z = complex(dp.curve[len(dp.curve) // 2])
    with pytest.raises(BoundaryHit):
        dynamic_strip_index(dp, z)


def test_out_of_range_falls_back(p2pi, dp):
    with pytest.raises(OutOfChartedRange):
        dynamic_strip_index(dp, complex(-40, 0.5))
    k, fb = strip_index(dp, complex(-40, 0.5))
    assert fb and k == static_strip_index(StaticPartition(p2pi), complex(-40, 0.5))
    assert itinerary(p2pi, dp, complex(-40, 0.5), 3).fallback


def test_partition_preconditions(p2pi, gamma):
    other = trace_ray(p2pi, Address.parse("|1"), 10)
    other.landing = 2j * math.pi
    with pytest.raises(GammaNotLanding):
        build_dynamic_partition(p2pi, other, -10)
    with pytest.raises(InsufficientData):
        build_dynamic_partition(p2pi, gamma, -1000)
    with pytest.raises(ValueError):
        build_dynamic_partition(p2pi, gamma, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_shift_law(p2pi, dp, x, y):
    z = complex(x, y)
    it = itinerary(p2pi, dp, z, 10)
    if not it.complete:
        return
    nxt = itinerary(p2pi, dp, eval_map(p2pi, z), 9)
    if nxt.complete:
        assert nxt.symbols == it.symbols[1:]


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_itineraries_exponentially_bounded(p2pi, dp, x, y):
    it = itinerary(p2pi, dp, complex(x, y), 10)
    if it.complete:
        assert exponential_bound(it.symbols, p2pi) is not None


def test_exponentially_bounded_fixtures(p2pi):
    for lam in [1, 0.25, 2j * math.pi]:
        assert is_exponentially_bounded_prefix([0] * 20, Parameter(lam), 1.0)
    assert not is_exponentially_bounded_prefix([0, 5], Parameter(1), 1.0)
    assert is_exponentially_bounded_prefix([0, 1, 2, 3, 4], Parameter(1), 3.0)
    # direct arithmetic for the first levels: 2 pi < e^3, 4 pi < e^{e^3}
    assert TWO_PI < math.exp(3) and 2 * TWO_PI < math.exp(math.exp(3))
    assert exponential_bound([0, 5], Parameter(1)) == 4.0
    assert exponential_bound([10 ** 6], Parameter(1)) is None
    with pytest.raises(ValueError):
        is_exponentially_bounded_prefix([], Parameter(1), 1.0)


def test_slope_bounds(dp):
    for k in range(-2, 3):
        sb = fit_slope_bound(dp, k)
        assert sb.c > 0 and sb.d > 1 and sb.holdout_ok
        curve = dp.preimage_curve(k)
        assert np.all(sb.holds(curve[curve.real < sb.m]))
    # the spiral of gamma around 0 fixes the slope near (pi/2)/log(2 pi)
    assert abs(fit_slope_bound(dp, 0).c - (math.pi / 2) / math.log(TWO_PI)) < 0.1


def test_slope_bound_holds():
    sb = SlopeBound(c=1.0, d=2.0, m=-5.0, k=1)
    z = np.array([-10 + 1j * (-10 + TWO_PI), -10 + 1j * (-7 + TWO_PI)])
    assert sb.holds(z).tolist() == [True, False]


def test_half_plane(p2pi, dp):
    mu = half_plane_itinerary_check(p2pi, dp, 3)
    assert mu == -8.0
    target = itinerary(p2pi, dp, 0j, 3).symbols
    rng = np.random.default_rng(5)
    for _ in range(50):
        z = complex(mu - rng.uniform(0, 10), rng.uniform(-10, 10))
        assert itinerary(p2pi, dp, eval_map(p2pi, z), 3).symbols == target
