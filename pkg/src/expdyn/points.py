"""Repelling periodic and preperiodic points found by inverse-branch
contraction, cycle multipliers, Koenigs coordinates and Misiurewicz checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import (
    TWO_PI,
    T_ESC,
    Parameter,
    eval_map,
    inverse_branch,
    log1p_complex,
    prod,
)
from .errors import (
    BoundaryHit,
    ChartEscape,
    ItineraryMismatch,
    NonConvergence,
    NotMisiurewicz,
    OverflowGuard,
    ZeroCollision,
    ZeroPreimage,
)
from .symbolic import StaticPartition, static_strip_index

MAX_ITER = 10_000
MISIUREWICZ_TOL = 1e-9


@dataclass(frozen=True)
class CycleData:
    points: tuple
    multiplier: complex
    itinerary_word: tuple
    residual: float
    # |successive iterate differences| of the inverse iteration
    steps: tuple = field(default=(), repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "points": [[z.real, z.imag] for z in self.points],
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "word": list(self.itinerary_word),
            "residual": self.residual,
        }


@dataclass(frozen=True)
class MisiurewiczData:
    parameter: Parameter
    preperiod: int
    period: int
    landing_cycle: CycleData
    orbit_residual: float
    orbit: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class KoenigsChart:
    base: complex
    multiplier: complex
    radius: float
    truncation: int = 200
    # cycle through the base, needed for stable local inverses
    cycle: tuple = ()

    def __post_init__(self):
        if abs(self.multiplier) <= 1:
            raise ValueError("Koenigs chart needs a repelling multiplier")
        if self.radius <= 0:
            raise ValueError("chart radius must be positive")


def _pull_word(p: Parameter, word: Sequence[int], z: complex) -> list[complex]:
    """Apply L_{w_{n-1}}, then ..., then L_{w_0}; returns the n intermediate points.

    out[i] is the point with symbol word[i] (out[0] is the final result).
    """
    out = [0j] * len(word)
    for i in range(len(word) - 1, -1, -1):
        if z == 0:
            raise ZeroCollision("inverse iteration hit the omitted value 0")
        z = inverse_branch(p, word[i], z)
        out[i] = z
    return out


def _contract(p: Parameter, word: tuple, z: complex, tol: float):
    steps = []
    for _ in range(MAX_ITER):
        new = _pull_word(p, word, z)[0]
        d = abs(new - z)
        steps.append(d)
        z = new
        if d < tol:
            return z, steps
    raise NonConvergence(f"no convergence after {MAX_ITER} iterations")


def find_periodic_point(
    p: Parameter,
    word: Sequence[int],
    tol: float = 1e-13,
    seed: Optional[complex] = None,
    check_itinerary: bool = True,
) -> CycleData:
    """Locate the repelling cycle with static itinerary ``word`` (repeated).

    Iterates the composed inverse branch from ``seed`` until successive
    iterates differ by less than ``tol``.  The default seed is 2 pi i word[0]
    (1+i when word[0] is 0, since 0 itself is omitted).
    """
    word = tuple(int(s) for s in word)
    if not word:
        raise ValueError("word must be nonempty")
    if tol < 1e-13:
        raise ValueError("tol must be >= 1e-13")
    if seed is None:
        # 2 pi i k anchors strip k, but for k = 0 that is the omitted value
        base = complex(0.0, TWO_PI * word[0]) if word[0] != 0 else 1.0 + 1.0j
        seeds = [base, base + 0.5, base + 0.5 + 0.5j]
    else:
        seeds = [complex(seed)]
    for i, start in enumerate(seeds):
        try:
            z, steps = _contract(p, word, start, tol)
            break
        except ZeroCollision:
            # the first pull-backs of a default seed can land exactly on 0
            if i == len(seeds) - 1:
                raise
    pts = _pull_word(p, word, z)
    # the cycle is stored in forward order: pts[i+1] = E(pts[i])
    n = len(word)
    residual = max(abs(eval_map(p, pts[i]) - pts[(i + 1) % n]) for i in range(n))
    multiplier = prod(pts[(i + 1) % n] for i in range(n))
    if check_itinerary:
        sp = StaticPartition(p)
        try:
            got = tuple(static_strip_index(sp, q) for q in pts)
        except BoundaryHit:
            raise ItineraryMismatch(f"cycle for {word} lies on a strip boundary") from None
        if got != word:
            raise ItineraryMismatch(f"found cycle has itinerary {got}, expected {word}")
    return CycleData(tuple(pts), multiplier, word, residual, tuple(steps))


def contraction_ratio(cycle: CycleData, last: int = 10, floor: float = 1e-13) -> float:
    """Geometric-mean ratio of successive inverse-iteration steps."""
    steps = [s for s in cycle.steps if s > floor]
    if len(steps) < 2:
        raise ValueError("not enough iteration steps recorded")
    steps = steps[-(last + 1):]
    logs = [math.log(b / a) for a, b in zip(steps, steps[1:])]
    return math.exp(sum(logs) / len(logs))


def find_preperiodic_point(
    p: Parameter,
    preword: Sequence[int],
    word: Sequence[int],
    tol: float = 1e-13,
) -> complex:
    """Point with itinerary preword followed by word repeated."""
    cycle = find_periodic_point(p, word, tol)
    z = cycle.points[0]
    if not preword:
        return z
    return _pull_word(p, tuple(preword), z)[0]


def default_chart(cycle: CycleData, truncation: int = 200) -> KoenigsChart:
    base = cycle.points[0]
    others = [abs(q - base) for q in cycle.points[1:]]
    radius = 0.5 if not others else min(0.5, 0.1 * min(others))
    n = len(cycle.points)
    # local inverse of E^n at base runs backwards along the cycle
    return KoenigsChart(base, cycle.multiplier, radius, truncation,
                        tuple(cycle.points[i % n] for i in range(n)))


def koenigs_coordinate(chart: KoenigsChart, p: Parameter, z: complex) -> complex:
    """Linearising coordinate Phi with Phi(g(z)) = mu Phi(z), g = E^period.

    The base is repelling, so Phi(z) = lim mu^n (h^n(z) - base) with h the
    local inverse of g; offsets are propagated with log1p to keep relative
    precision as they shrink.
    """
    cyc = chart.cycle or (chart.base,)
    n = len(cyc)
    delta = complex(z) - chart.base
    if abs(delta) >= 10 * chart.radius:
        raise ChartEscape(f"|z - base| = {abs(delta):.3g} outside 10 x chart radius")
    mu = chart.multiplier
    scale = complex(1.0)
    prev = delta
    for _ in range(chart.truncation):
        # one application of h: back through cyc[n-1], ..., cyc[0]
        for i in range(n - 1, -1, -1):
            image = cyc[(i + 1) % n]
            delta = log1p_complex(delta / image)
        if abs(delta) >= 10 * chart.radius:
            raise ChartEscape("inverse iterate left the chart")
        scale *= mu
        cur = scale * delta
        if abs(cur - prev) < 1e-12:
            return cur
        prev = cur
    return prev


def _attracting_limit(p: Parameter, z: complex, steps: int = 2000, max_period: int = 16):
    """|multiplier| of an attracting cycle the orbit of ``z`` settles on, if any."""
    orbit = [z]
    for _ in range(steps):
        cur = orbit[-1]
        if cur.real > T_ESC:
            return None
        orbit.append(eval_map(p, cur))
    last = orbit[-1]
    for q in range(1, max_period + 1):
        if abs(orbit[-1 - q] - last) < 1e-10 * (1.0 + abs(last)):
            mult = prod(orbit[-q:])
            return abs(mult) if abs(mult) < 1 else None
    return None


def verify_misiurewicz(
    p: Parameter,
    m: int,
    period: int,
    tol: float = MISIUREWICZ_TOL,
) -> MisiurewiczData:
    """Check that 0 lands after ``m`` steps on a repelling cycle of ``period``."""
    if m < 1 or period < 1:
        raise ValueError("m and period must be >= 1")
    n_steps = m + 10 * period
    orbit = [0j]
    for _ in range(n_steps):
        cur = orbit[-1]
        if cur.real > T_ESC:
            raise NotMisiurewicz("orbit of 0 escaped by horizon")
        try:
            orbit.append(eval_map(p, cur))
        except OverflowGuard:
            raise NotMisiurewicz("orbit of 0 escaped by horizon") from None

    sp = StaticPartition(p)
    try:
        word = tuple(static_strip_index(sp, orbit[m + i]) for i in range(period))
    except BoundaryHit:
        raise NotMisiurewicz("orbit of 0 meets a strip boundary") from None
    try:
        cycle = find_periodic_point(p, word, tol=min(max(tol * 1e-3, 1e-13), 1e-10))
    except (NonConvergence, ZeroCollision, ItineraryMismatch) as exc:
        raise NotMisiurewicz(f"no repelling cycle with itinerary {word}: {exc}") from None

    residual = abs(orbit[m] - cycle.points[0])
    if residual >= tol:
        attracting = _attracting_limit(p, orbit[-1])
        if attracting is not None:
            raise NotMisiurewicz(
                f"orbit of 0 converges to an attracting cycle (|multiplier|={attracting:.4g})"
            )
        raise NotMisiurewicz(
            f"no itinerary periodicity observed: |E^{m}(0) - cycle| = {residual:.3g}"
        )
    if abs(cycle.multiplier) <= 1:
        raise NotMisiurewicz("landing cycle is not repelling")
    for j in range(m):
        if any(abs(orbit[j] - q) < tol for q in cycle.points):
            raise NotMisiurewicz(f"E^{j}(0) already lies on the cycle; preperiod is smaller")
    for j in range(m + period):
        for k in range(j + 1, m + period):
            if j >= m and k >= m:
                continue
            if abs(orbit[j] - orbit[k]) < tol:
                raise NotMisiurewicz(f"orbit coincidence E^{j}(0) = E^{k}(0)")
    return MisiurewiczData(p, m, period, cycle, residual, tuple(orbit[: m + period + 1]))
