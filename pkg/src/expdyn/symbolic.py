"""Plane partitions (static strips and the strips cut out by preimages of a
hair landing at 0), itineraries and exponential-boundedness tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np

from .core import (
    T_ESC,
    TWO_PI,
    Parameter,
    eval_map,
    tower_log,
)
from .errors import (
    BoundaryHit,
    GammaNotLanding,
    InsufficientData,
    NotFound,
    OutOfChartedRange,
)

if TYPE_CHECKING:
    from .rays import Ray

DELTA_B = 1e-9
X_RIGHT = 60.0
_CURVE_STEP = 0.1
_BUCKET = 0.25


@dataclass(frozen=True)
class StaticPartition:
    parameter: Parameter


def static_strip_index(sp: StaticPartition, z: complex) -> int:
    """Index k with (2k-1)pi - arg(lam) < Im z <= (2k+1)pi - arg(lam)."""
    z = complex(z)
    shifted = z.imag + sp.parameter.argument + math.pi
    k = math.ceil(shifted / TWO_PI) - 1
    r = shifted - TWO_PI * k
    if min(r, TWO_PI - r) < DELTA_B:
        raise BoundaryHit(f"{z} lies within {DELTA_B} of a static strip boundary")
    return k


@dataclass(frozen=True, eq=False)
class DynamicPartition:
    """Strips between consecutive translates ``curve + 2 pi i k`` of the
    preimage component of gamma; ``label_offset`` makes 2 pi i k lie in R_k."""

    parameter: Parameter
    gamma: "Ray"
    curve: np.ndarray  # component k = 0, ordered from the far left to the far right
    x_left: float
    x_right: float
    label_offset: int = 0
    _seg_a: np.ndarray = field(default=None, repr=False)
    _seg_b: np.ndarray = field(default=None, repr=False)
    _xlo: np.ndarray = field(default=None, repr=False)
    _xhi: np.ndarray = field(default=None, repr=False)
    _buckets: list = field(default=None, repr=False)
    _max_seg: float = 0.0

    def preimage_curve(self, k: int) -> np.ndarray:
        return self.curve + 1j * (TWO_PI * k)

    @property
    def preimage_curves(self):
        """Mapping-like access ``dp.preimage_curves[k]``."""
        return _CurveMap(self)


class _CurveMap:
    def __init__(self, dp):
        self._dp = dp

    def __getitem__(self, k):
        return self._dp.preimage_curve(int(k))


def _gamma_params(gamma: "Ray"):
    return np.asarray(gamma.band), np.asarray(gamma.u, dtype=float)


def _preimage_unwrapped(p: Parameter, w: np.ndarray) -> np.ndarray:
    """Continuous preimage of a polyline ordered from +infinity inwards,
    anchored to the principal branch at its outer end."""
    ang = np.unwrap(np.angle(w))
    ang += np.angle(w[0]) - ang[0]
    return np.log(np.abs(w)) - math.log(p.modulus) + 1j * (ang - p.argument)


def build_dynamic_partition(
    p: Parameter,
    gamma: "Ray",
    x_left: float,
    x_right: float = X_RIGHT,
    step_max: float = _CURVE_STEP,
) -> DynamicPartition:
    """Preimage curves of ``gamma`` (a hair landing at 0).

    The straight tail of gamma is extended analytically far enough that the
    preimage curves reach Re = ``x_right``; gamma is re-sampled where its
    preimage would exceed ``step_max`` between vertices.
    """
    from .rays import EPS_LAND, T_TAIL, ray_points, tail_height

    if gamma.landing is None or abs(gamma.landing) > EPS_LAND:
        raise GammaNotLanding("gamma must carry a landing point at 0")
    if x_left >= 0:
        raise ValueError("x_left must be negative")
    band, u = _gamma_params(gamma)
    w = np.asarray(gamma.z, dtype=complex)
    keep = w != 0
    band, u, w = band[keep], u[keep], w[keep]

    for _ in range(40):
        z = _preimage_unwrapped(p, w)
        gaps = np.abs(np.diff(z)) > step_max
        if not gaps.any():
            break
        idx = np.nonzero(gaps)[0]
        new_band, new_u = [], []
        for i in idx:
            b0, b1 = band[i], band[i + 1]
            if b0 == b1:
                new_band.append(b0)
                new_u.append(0.5 * (u[i] + u[i + 1]))
            else:  # crossing into the next band: its u runs up to 1
                new_band.append(b1)
                new_u.append(0.5 * (u[i + 1] + 1.0))
        new_band = np.array(new_band)
        new_u = np.array(new_u)
        new_w = np.empty(len(idx), dtype=complex)
        for b in np.unique(new_band):
            sel = new_band == b
            new_w[sel] = ray_points(p, gamma.address, int(b), new_u[sel])
        band = np.insert(band, idx + 1, new_band)
        u = np.insert(u, idx + 1, new_u)
        w = np.insert(w, idx + 1, new_w)
    z = _preimage_unwrapped(p, w)

    if z.real.min() > x_left:
        raise InsufficientData(
            f"gamma reaches only Re={z.real.min():.2f} in preimage; trace deeper for x_left={x_left}"
        )

    # analytic continuation of the straight tail out to x_right
    h0 = tail_height(p, gamma.address.symbol(0))
    x_start = float(w[0].real)
    x_end = p.modulus * math.exp(x_right)
    if x_end > x_start:
        n = int(math.ceil((math.log(x_end) - math.log(x_start)) / (0.5 * step_max))) + 1
        xs = np.exp(np.linspace(math.log(x_start), math.log(x_end), n))[1:]
        ext = xs + 1j * h0
        z_ext = np.log(np.abs(ext)) - math.log(p.modulus) + 1j * (np.angle(ext) - p.argument)
        # keep the branch of the traced part
        z_ext += 1j * TWO_PI * round((z[0].imag - (np.angle(w[0]) - p.argument)) / TWO_PI)
        z = np.concatenate([z_ext[::-1], z])
    curve = z[::-1].copy()

    dp = DynamicPartition(p, gamma, curve, float(x_left), float(x_right))
    object.__setattr__(dp, "_seg_a", curve[:-1])
    object.__setattr__(dp, "_seg_b", curve[1:])
    object.__setattr__(dp, "_xlo", np.minimum(curve[:-1].real, curve[1:].real))
    object.__setattr__(dp, "_xhi", np.maximum(curve[:-1].real, curve[1:].real))
    object.__setattr__(dp, "_buckets", _bucket_segments(dp))
    object.__setattr__(dp, "_max_seg", float(np.max(np.abs(np.diff(curve)))))
    raw0 = _raw_index(dp, 0j)
    object.__setattr__(dp, "label_offset", -raw0)
    return dp


def _bucket_segments(dp: DynamicPartition) -> list:
    """Segment indices per Re-interval of width _BUCKET (with a DELTA_B margin)."""
    n = int(math.ceil((dp.x_right - dp.x_left) / _BUCKET)) + 1
    first = np.floor((dp._xlo - DELTA_B - dp.x_left) / _BUCKET).astype(int).clip(0, n - 1)
    last = np.floor((dp._xhi + DELTA_B - dp.x_left) / _BUCKET).astype(int).clip(0, n - 1)
    buckets = [[] for _ in range(n)]
    for i, (f, l) in enumerate(zip(first.tolist(), last.tolist())):
        for j in range(f, l + 1):
            buckets[j].append(i)
    return [np.array(b, dtype=np.int64) for b in buckets]


def _segments_near(dp: DynamicPartition, x: float, margin: float):
    cand = dp._buckets[min(max(int((x - dp.x_left) / _BUCKET), 0), len(dp._buckets) - 1)]
    lo, hi = dp._xlo[cand], dp._xhi[cand]
    sel = cand[(lo - margin <= x) & (x <= hi + margin)]
    return dp._seg_a[sel], dp._seg_b[sel], dp._xlo[sel], dp._xhi[sel]


def _crossings_of(a, b, lo, hi, x: float):
    sel = (lo <= x) & (x < hi)
    a, b = a[sel], b[sel]
    t = (x - a.real) / (b.real - a.real)
    y = a.imag + t * (b.imag - a.imag)
    sign = np.where(b.real > a.real, 1, -1)
    return y, sign


def _crossings(dp: DynamicPartition, x: float):
    """Heights where the vertical line Re = x crosses curve 0, with the
    direction of each crossing."""
    return _crossings_of(*_segments_near(dp, x, 0.0), x)


def _raw_index(dp: DynamicPartition, z: complex) -> int:
    z = complex(z)
    if not (dp.x_left <= z.real <= dp.x_right):
        raise OutOfChartedRange(f"Re(z)={z.real} outside charted [{dp.x_left}, {dp.x_right}]")
    a, b, lo, hi = _segments_near(dp, z.real, DELTA_B)
    y, sign = _crossings_of(a, b, lo, hi, z.real)
    if len(y) == 0:
        raise OutOfChartedRange(f"no curve data at Re={z.real}")
    gaps = (z.imag - y) / TWO_PI
    frac = gaps - np.floor(gaps)
    gap = float(np.min(np.minimum(frac, 1.0 - frac))) * TWO_PI
    # when every segment within DELTA_B of Re = x crosses it, a vertical gap
    # above the longest segment rules out a near miss
    suspect = gap <= dp._max_seg + DELTA_B or len(a) > len(y)
    if gap < DELTA_B or (suspect and _near_curve(a, b, z)):
        raise BoundaryHit(f"{z} lies within {DELTA_B} of a preimage curve")
    return int(np.sum(sign * np.floor(gaps)))


def _near_curve(a: np.ndarray, b: np.ndarray, z: complex) -> bool:
    """Whether z is within DELTA_B of some translate of the segments a-b."""
    ylo = np.minimum(a.imag, b.imag)
    yhi = np.maximum(a.imag, b.imag)
    # segments are much shorter than 2 pi, so one translate per segment can matter
    m = np.floor((z.imag + DELTA_B - ylo) / TWO_PI)
    sel = z.imag - DELTA_B <= yhi + TWO_PI * m
    if not sel.any():
        return False
    shift = 1j * TWO_PI * m[sel]
    a, b = a[sel] + shift, b[sel] + shift
    d = b - a
    denom = np.where(np.abs(d) > 0, np.abs(d) ** 2, 1.0)
    t = np.clip(((z - a) * np.conj(d)).real / denom, 0.0, 1.0)
    return bool(np.any(np.abs(a + t * d - z) < DELTA_B))


def dynamic_strip_index(dp: DynamicPartition, z: complex) -> int:
    """Index k with z in R_k, by signed crossings of the vertical through z."""
    return _raw_index(dp, z) + dp.label_offset


@dataclass(frozen=True)
class Itinerary:
    symbols: tuple
    complete: bool
    # True when some symbol came from the static fallback outside charted range
    fallback: bool = False

    def to_json(self, z: complex) -> dict:
        z = complex(z)
        return {"z": [z.real, z.imag], "symbols": list(self.symbols), "complete": self.complete}


Partition = Union[StaticPartition, DynamicPartition]


def strip_index(partition: Partition, z: complex) -> tuple[int, bool]:
    """Classify ``z``; returns (index, used_static_fallback)."""
    if isinstance(partition, StaticPartition):
        return static_strip_index(partition, z), False
    try:
        return dynamic_strip_index(partition, z), False
    except OutOfChartedRange:
        return static_strip_index(StaticPartition(partition.parameter), z), True


def itinerary(
    p: Parameter, partition: Partition, z: complex, n: int, t_esc: float = T_ESC
) -> Itinerary:
    if n < 1:
        raise ValueError("n must be >= 1")
    symbols = []
    fallback = False
    z = complex(z)
    for j in range(n):
        if z.real > t_esc:
            return Itinerary(tuple(symbols), False, fallback)
        try:
            k, fb = strip_index(partition, z)
        except BoundaryHit:
            return Itinerary(tuple(symbols), False, fallback)
        symbols.append(k)
        fallback = fallback or fb
        if j < n - 1:
            z = eval_map(p, z)
    return Itinerary(tuple(symbols), True, fallback)


def is_exponentially_bounded_prefix(prefix: Sequence[int], p: Parameter, x_hat: float) -> bool:
    """Check 2 pi |r_j| < E_{|lam|}^j(x_hat) for every j in the prefix."""
    if x_hat <= 0:
        raise ValueError("x_hat must be positive")
    if len(prefix) == 0:
        raise ValueError("prefix must be nonempty")
    for j, r in enumerate(prefix):
        if r == 0:
            continue  # E^j of a positive number is positive
        if not math.log(TWO_PI * abs(r)) < tower_log(p.modulus, x_hat, j):
            return False
    return True


def exponential_bound(prefix: Sequence[int], p: Parameter) -> Optional[float]:
    """Smallest x_hat in {1, 2, 4, ..., 1024} certifying the prefix, else None."""
    for e in range(11):
        x_hat = float(2 ** e)
        if is_exponentially_bounded_prefix(prefix, p, x_hat):
            return x_hat
    return None


@dataclass(frozen=True)
class SlopeBound:
    c: float
    d: float
    m: float
    k: int = 0
    holdout_ok: bool = True

    def holds(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        base = self.c * z.real + TWO_PI * self.k
        return (base - self.d <= z.imag) & (z.imag <= base + self.d)


def fit_slope_bound(dp: DynamicPartition, k: int, min_points: int = 50) -> SlopeBound:
    """Fit Im z ~ c Re z + 2 pi k on the far-left part of preimage curve k and
    inflate the residual into a sandwich half-width d > 1."""
    curve = dp.preimage_curve(k)
    if np.count_nonzero(curve.real < -5) < min_points:
        raise InsufficientData(f"fewer than {min_points} curve points with Re < -5")
    xmin, xmax = float(curve.real.min()), float(curve.real.max())
    m = min(xmin + 0.25 * (xmax - xmin), -5.0)
    pts = curve[curve.real < m]
    if len(pts) < min_points:
        pts = curve[curve.real < -5]
        m = -5.0
    train, held = pts[0::2], pts[1::2]
    x = train.real
    y = train.imag - TWO_PI * k
    c = float(np.dot(x, y) / np.dot(x, x))
    d = max(1.05 * float(np.max(np.abs(y - c * x))), 1.05)
    bound = SlopeBound(c, d, m, k)
    ok = bool(np.all(bound.holds(held)))
    return SlopeBound(c, d, m, k, ok)


def half_plane_itinerary_check(
    p: Parameter,
    dp: DynamicPartition,
    n: int,
    samples: int = 200,
    seed: int = 0,
    mu_start: float = -1.0,
    mu_floor: float = -200.0,
) -> float:
    """Find mu < 0 such that sampled z with Re z < mu have r_j = s_{j-1},
    j = 1..n, where s is the itinerary of 0."""
    s = itinerary(p, dp, 0j, n + 1)
    if not s.complete:
        raise NotFound("itinerary of 0 is not available to the requested depth")
    target = s.symbols[:n]
    rng = np.random.default_rng(seed)
    depth_off = rng.uniform(0.0, 10.0, samples)
    ims = rng.uniform(-10.0, 10.0, samples)
    mu = mu_start
    while mu >= mu_floor:
        good = True
        for off, y in zip(depth_off, ims):
            w = eval_map(p, complex(mu - off, y))
            it = itinerary(p, dp, w, n)
            if not it.complete or it.symbols != target:
                good = False
                break
        if good:
            return mu
        mu *= 2.0
    raise NotFound(f"no mu >= {mu_floor} makes the half-plane itinerary match")
