import json
import math

import numpy as np
from hypothesis import given, strategies as st

from expdyn import io
from expdyn.core import Parameter
from expdyn.points import find_periodic_point
from expdyn.rays import Address, trace_ray
from expdyn.symbolic import Itinerary


def test_pgm_round_trip(tmp_path):
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    path = tmp_path / "a.pgm"
    io.write_pgm(path, img)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n4 3\n255\n")
    assert raw[len(b"P5\n4 3\n255\n"):] == img.tobytes()
    assert np.array_equal(io.read_pgm(path), img)


def test_ray_csv_round_trip(tmp_path, gamma):
    path = tmp_path / "g.csv"
    io.write_ray_csv(path, gamma)
    head = path.read_text().splitlines()[:2]
    assert head == ["# address=0|1 lambda=0,6.2831853071795862 depth=30", "t,re,im"]
    back = io.read_ray_csv(path)
    assert back.address == gamma.address and back.depth == 30
    assert back.parameter == gamma.parameter
    assert np.array_equal(back.t, gamma.t)
    assert np.array_equal(back.z, gamma.z)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_17_digits_exact(x):
    assert float(io._g17(x)) == x


def test_curve_csv(tmp_path, dp):
    path = tmp_path / "c.csv"
    io.write_curve_csv(path, dp.preimage_curve(1), "0|1", dp.parameter, 30)
    back = io.read_ray_csv(path)
    assert np.array_equal(back.z, dp.preimage_curve(1))


def test_json_records():
    line = io.itinerary_json_line(1 + 2j, Itinerary((0, 1), False))
    assert json.loads(line) == {"z": [1.0, 2.0], "symbols": [0, 1], "complete": False}
    c = find_periodic_point(Parameter(2j * math.pi), [1])
    data = json.loads(io.cycle_json(c))
    assert set(data) == {"points", "multiplier", "word", "residual"}
    assert data["points"] == [[0.0, 2 * math.pi]]


def test_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nlambda = 0+6.283185307179586i\n\nt-esc = 60  # inline\n")
    assert io.read_config(path) == {"lambda": "0+6.283185307179586i", "t_esc": "60"}


def test_cache(tmp_path):
    p = Parameter(0.25)
    a = Address.parse("|0")
    calls = []

    def trace():
        calls.append(1)
        return trace_ray(p, a, 5)

    first = io.cached_ray(tmp_path, p, a, 5, trace)
    second = io.cached_ray(tmp_path, p, a, 5, trace)
    assert len(calls) == 1
    assert np.array_equal(first.z, second.z)
    assert io.cache_key(p, Address.parse("0,1|2"), 5) != io.cache_key(p, Address.parse("0|1,2"), 5)
    assert io.cache_key(Parameter(-1j), a, 5) != io.cache_key(Parameter(1j), a, 5)
