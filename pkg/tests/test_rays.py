import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from expdyn.core import Parameter, eval_map_array
from expdyn.errors import NotFound, PullbackCollision
from expdyn.rays import (
    EPS_RAY,
    T_TAIL,
    TAIL_LENGTH,
    Address,
    _extrapolate,
    find_ray_landing_at,
    innermost_points,
    landing_point,
    trace_ray,
)


def polyline_distance(q, line):
    a, b = line[:-1], line[1:]
    d = b - a
    denom = np.where(np.abs(d) > 0, np.abs(d) ** 2, 1.0)
    t = np.clip(((q - a) * np.conj(d)).real / denom, 0, 1)
    return float(np.min(np.abs(a + t * d - q)))


words = st.lists(st.integers(-3, 3), max_size=4)


@given(words, words.filter(bool))
def test_address_normal_form_keeps_sequence(pre, per):
    a = Address(tuple(pre), tuple(per))
    n = len(pre) + 3 * len(per) + 5
    expect = (pre + per * n)[:n]
    assert a.symbols(n) == expect
    assert Address.parse(str(a)) == a
    assert a.shift().symbols(n - 1) == expect[1:]


def test_address_parse():
    assert Address.parse("0|1") == Address((0,), (1,))
    assert Address.parse("|0") == Address((), (0,))
    assert Address.parse("1|1") == Address((), (1,))
    assert str(Address.parse(" 2, -1 | 3,3 ")) == "2,-1|3"
    with pytest.raises(ValueError):
        Address.parse("0,1")
    with pytest.raises(ValueError):
        Address((), ())


def test_real_ray(fixed_025):
    p = Parameter(0.25)
    r = trace_ray(p, Address.parse("|0"), 20)
    assert np.max(np.abs(r.z.imag)) < 1e-8
    assert r.z.real.min() <= fixed_025 + 1e-3
    assert r.z.real.max() >= T_TAIL + TAIL_LENGTH
    assert np.all(np.diff(r.t) < 0)
    assert np.max(np.abs(np.diff(r.z))) <= 0.1 + 1e-12
    assert abs(landing_point(r) - fixed_025) < 1e-8


def test_fixed_ray_lambda_one(fixed_1):
    p = Parameter(1)
    s = Address.parse("|0")
    # the hair of the strip-0 fixed point contains the singular value 0
    with pytest.raises(PullbackCollision):
        trace_ray(p, s, 20)
    assert abs(_extrapolate(p, s, 30) - fixed_1) < 1e-6
    assert find_ray_landing_at(p, fixed_1, 1) == s


def test_find_ray_real(fixed_025):
    assert find_ray_landing_at(Parameter(0.25), fixed_025, 1) == Address.parse("|0")


def test_gamma_lands_at_zero(p2pi, gamma):
    s = find_ray_landing_at(p2pi, 0j, 2)
    assert s == gamma.address
    assert len(s.preperiod) >= 1 and s.shift(len(s.preperiod)) == Address.parse("|1")
    assert abs(gamma.landing) < 1e-6
    tail = gamma.z[gamma.z.real >= T_TAIL]
    assert np.ptp(tail.imag) < 0.1


def test_fixed_ray_of_2pi_i(p2pi):
    r = trace_ray(p2pi, Address.parse("|1"), 25)
    assert abs(landing_point(r) - 2j * math.pi) < 1e-10


@pytest.mark.parametrize("lam,addr", [(0.25, "|0"), (2j * math.pi, "0|1"), (2j * math.pi, "|1"),
                                      (-1.0 + 0.5j, "1,-1|0")])
def test_shift_semiconjugacy(lam, addr):
    p = Parameter(lam)
    s = Address.parse(addr)
    depth = 12
    r = trace_ray(p, s, depth)
    shifted = trace_ray(p, s.shift(), depth)
    sel = (r.band >= 1) & (r.t >= 2 * 1e-9)
    img = eval_map_array(p, r.z[sel])
    # the outer band lands on the far tail, which the shifted ray only traces up to Re 55
    img = img[(r.band[sel] >= 2) | (img.real <= T_TAIL + TAIL_LENGTH)]
    worst = max(polyline_distance(q, shifted.z) for q in img[::7])
    assert worst < EPS_RAY


@pytest.mark.parametrize("lam,addr", [(0.25, "|0"), (2j * math.pi, "0|1"), (-1.0 + 0.5j, "|0")])
def test_depth_convergence(lam, addr):
    p = Parameter(lam)
    s = Address.parse(addr)
    inner = innermost_points(p, s, 20)
    diffs = np.abs(np.diff(inner))[4:]
    diffs = diffs[diffs > 1e-13]
    assert len(diffs) >= 3
    assert np.all(np.diff(diffs) < 0)
    assert np.exp(np.mean(np.log(diffs[1:] / diffs[:-1]))) <= 0.9


def test_address_entry_bound(p2pi):
    with pytest.raises(ValueError):
        trace_ray(p2pi, Address.parse("|101"), 5)


def test_find_ray_not_found(p2pi):
    with pytest.raises(NotFound):
        find_ray_landing_at(p2pi, 3.0 + 1.0j, 1, max_len=1)
