import math

import numpy as np
import pytest

from expdyn.core import Parameter
from expdyn.rays import Address, landing_point, trace_ray
from expdyn.symbolic import build_dynamic_partition

LAM_2PI = complex(0.0, 2 * math.pi)


def bisect(f, a, b, tol=1e-15):
    fa = f(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
        if b - a < tol:
            break
    return 0.5 * (a + b)


def newton(f, df, z, steps=60):
    for _ in range(steps):
        z = z - f(z) / df(z)
    return z


@pytest.fixture(scope="session")
def p2pi():
    return Parameter(LAM_2PI)


@pytest.fixture(scope="session")
def fixed_025():
    # repelling real fixed point of 0.25 e^x, independent of the package
    return bisect(lambda x: 0.25 * math.exp(x) - x, 1.0, 3.0)


@pytest.fixture(scope="session")
def fixed_1():
    return newton(lambda z: np.exp(z) - z, lambda z: np.exp(z) - 1, 0.3 + 1.3j)


@pytest.fixture(scope="session")
def gamma(p2pi):
    g = trace_ray(p2pi, Address.parse("0|1"), 30)
    landing_point(g)
    return g


@pytest.fixture(scope="session")
def dp(p2pi, gamma):
    return build_dynamic_partition(p2pi, gamma, -30.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
