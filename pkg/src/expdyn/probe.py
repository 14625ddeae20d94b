"""Numerical probe of the nested-box argument: boxes B_j of width 2 pi
starting at Re z = E^j_{|lam|}(rho) inside the strip of symbol r_j, with
B_{j+1} required to lie inside E(B_j)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import TWO_PI, Parameter, tower_log
from .errors import OutOfChartedRange, PrefixNotExponentiallyBounded
from .symbolic import DynamicPartition, _crossings, _raw_index

SAMPLES = 256
REFINE = 4
# beyond this real part a width of 2 pi is no longer resolved to ~1e-3
LINEAR_LIMIT = 1e12
SECTOR_FACTOR = math.sqrt(2.0) / 2.0 * math.exp(TWO_PI)


@dataclass(frozen=True)
class EscapeBox:
    k: int
    left: float  # inf when only the log-domain value is available
    right: float
    j: int
    rho: float
    log_left: float = 0.0

    @property
    def linear(self) -> bool:
        return math.isfinite(self.left) and self.left <= LINEAR_LIMIT


@dataclass
class LevelReport:
    j: int
    box: EscapeBox
    next_box: EscapeBox
    covering: str  # "pass", "fail" or "skipped"
    samples: int
    sector_inequality: bool
    sector_condition: bool
    static_substitute: bool = False
    failures: int = 0

    @property
    def analytic_only(self) -> bool:
        return self.covering == "skipped"

    @property
    def passed(self) -> bool:
        return self.covering != "fail" and self.sector_inequality and self.sector_condition

    def to_json(self) -> dict:
        return {
            "level": self.j,
            "k": self.box.k,
            "log_left": self.box.log_left,
            "covering": self.covering,
            "samples": self.samples,
            "failures": self.failures,
            "sector_inequality": self.sector_inequality,
            "sector_condition": self.sector_condition,
            "static_substitute": self.static_substitute,
            "mode": "analytic-only" if self.analytic_only else "numeric",
        }


@dataclass
class ProbeReport:
    parameter: Parameter
    prefix: tuple
    rho: float
    levels: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(lv.passed for lv in self.levels)

    def to_json(self) -> dict:
        return {
            "prefix": list(self.prefix),
            "rho": self.rho,
            "passed": self.passed,
            "levels": [lv.to_json() for lv in self.levels],
        }


def make_box(p: Parameter, k: int, rho: float, j: int) -> EscapeBox:
    lg = tower_log(p.modulus, rho, j) if j > 0 else math.log(rho)
    left = math.exp(lg) if lg < 700.0 else math.inf
    return EscapeBox(int(k), left, left + TWO_PI, j, rho, lg)


def sector_inequality(log_x: float) -> bool:
    """(sqrt2/2) e^{2 pi} X > X + 2 pi, written as X (c - 1) > 2 pi in logs."""
    return log_x + math.log(SECTOR_FACTOR - 1.0) > math.log(TWO_PI)


def sector_condition(k: int, log_left: float) -> bool:
    """2 pi |k| < left, so the box stays in the sector |Im z| <= Re z."""
    if k == 0:
        return True
    return math.log(TWO_PI * abs(k)) < log_left


class _Bounds:
    """Lower boundary of strip k as a function of Re z."""

    def __init__(self, p: Parameter, partition: Optional[DynamicPartition]):
        self.p = p
        self.dp = partition
        self.substituted = False

    def static(self, k: int, x: np.ndarray) -> np.ndarray:
        return np.full(np.shape(x), (2 * k - 1) * math.pi - self.p.argument)

    def dynamic(self, k: int, x: float) -> float:
        y, _ = _crossings(self.dp, x)
        if len(y) != 1:
            raise OutOfChartedRange(f"preimage curve is not a graph at Re={x}")
        m = _raw_index(self.dp, complex(x, y[0] + math.pi)) + self.dp.label_offset
        return float(y[0] + TWO_PI * (k - m))

    def lower(self, k: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dp is not None and x.min() >= self.dp.x_left and x.max() <= self.dp.x_right:
            try:
                return np.array([self.dynamic(k, xi) for xi in x])
            except OutOfChartedRange:
                pass
        self.substituted = True
        return self.static(k, x)


def _boundary_samples(box: EscapeBox, bounds: _Bounds, n: int) -> np.ndarray:
    t = (np.arange(n) + 0.5) / n
    xs = box.left + TWO_PI * t
    lo = bounds.lower(box.k, xs)
    sides = [
        xs + 1j * lo,
        xs + 1j * (lo + TWO_PI),
    ]
    for x in (box.left, box.right):
        y0 = bounds.lower(box.k, np.array([x]))[0]
        sides.append(x + 1j * (y0 + TWO_PI * t))
    return np.concatenate(sides)


def _covering_failures(p: Parameter, box: EscapeBox, nxt: EscapeBox,
                       bounds: _Bounds, n: int) -> int:
    """Number of boundary samples of ``nxt`` without a preimage in ``box``."""
    w = _boundary_samples(nxt, bounds, n)
    z0 = np.log(w) - p.log_lam
    tol = 1e-12 * (1.0 + box.right)
    bad = 0
    for z in z0:
        if not (box.left - tol <= z.real <= box.right + tol):
            bad += 1
            continue
        # the unique translate of z in the strip's half-open vertical range
        lo = bounds.lower(box.k, np.array([z.real]))[0]
        m = math.floor((z.imag - lo) / TWO_PI)
        zz = z - 1j * TWO_PI * m
        if not (lo - tol <= zz.imag <= lo + TWO_PI + tol):
            bad += 1
    return bad


def probe_escape_boxes(
    p: Parameter,
    itinerary_prefix: Sequence[int],
    rho: float,
    levels: int,
    partition: Optional[DynamicPartition] = None,
    samples: int = SAMPLES,
) -> ProbeReport:
    """Check the box construction level by level.

    Vertical box extents come from ``partition`` where it is charted and
    from the static strips otherwise (reported as a substitution).
    """
    prefix = tuple(int(r) for r in itinerary_prefix)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if len(prefix) < levels + 1:
        raise ValueError(f"prefix needs at least {levels + 1} symbols for {levels} levels")
    if rho <= 0:
        raise ValueError("rho must be positive")

    boxes = [make_box(p, prefix[j], rho, j) for j in range(levels + 1)]
    for b in boxes:
        if not sector_condition(b.k, b.log_left):
            raise PrefixNotExponentiallyBounded(
                f"2 pi |r_{b.j}| = {TWO_PI * abs(b.k):.4g} is not below E^{b.j}(rho)"
            )

    report = ProbeReport(p, prefix, float(rho))
    for j in range(levels):
        box, nxt = boxes[j], boxes[j + 1]
        bounds = _Bounds(p, partition)
        ineq = sector_inequality(nxt.log_left)
        if box.linear and nxt.linear:
            n = samples
            fails = _covering_failures(p, box, nxt, bounds, n)
            if fails:
                n = samples * REFINE
                fails = _covering_failures(p, box, nxt, bounds, n)
            covering = "fail" if fails else "pass"
        else:
            n, fails, covering = 0, 0, "skipped"
        report.levels.append(LevelReport(
            j, box, nxt, covering, n, ineq, True, bounds.substituted or partition is None, fails,
        ))
    return report
