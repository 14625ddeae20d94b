"""Dynamic rays (hairs) built by pulling straight far-right tails back
through inverse branches, plus landing-point extrapolation and search."""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    TWO_PI,
    Parameter,
    eval_map,
    inverse_branch,
    inverse_branch_array,
    log1p_complex,
)
from .errors import (
    BoundaryHit,
    OverflowGuard,
    DepthInsufficient,
    NoConvergence,
    NotFound,
    PullbackCollision,
)

T_TAIL = 50.0
TAIL_LENGTH = 5.0
TAIL_STEP = 0.25
STEP_MAX = 0.1
EPS_RAY = 1e-9
EPS_LAND = 1e-10
DELTA_0 = 1e-12
S_MAX = 100
L_MAX = 4
MAX_LANDING_DEPTH = 200

_MAX_REFINE = 40
_BAND_SEED = 64


@dataclass(frozen=True)
class Address:
    """Eventually periodic integer sequence ``preperiod . period period ...``.

    Stored in normal form: the period is primitive and the preperiod is as
    short as possible.
    """

    preperiod: tuple = ()
    period: tuple = (0,)

    def __post_init__(self):
        pre = [int(s) for s in self.preperiod]
        per = [int(s) for s in self.period]
        if not per:
            raise ValueError("period word must be nonempty")
        n = len(per)
        for d in range(1, n + 1):
            if n % d == 0 and per == per[:d] * (n // d):
                per = per[:d]
                break
        while pre and pre[-1] == per[-1]:
            pre.pop()
            per = per[-1:] + per[:-1]
        object.__setattr__(self, "preperiod", tuple(pre))
        object.__setattr__(self, "period", tuple(per))

    @classmethod
    def parse(cls, text: str) -> "Address":
        """Parse ``"<preperiod>|<period>"``, e.g. ``"0|1"`` or ``"|0"``."""
        if "|" not in text:
            raise ValueError(f"address {text!r} must contain '|'")
        left, right = text.split("|", 1)

        def ints(s):
            s = s.strip()
            return tuple(int(v) for v in s.split(",")) if s else ()

        return cls(ints(left), ints(right))

    def __str__(self):
        return ",".join(map(str, self.preperiod)) + "|" + ",".join(map(str, self.period))

    def symbol(self, j: int) -> int:
        if j < len(self.preperiod):
            return self.preperiod[j]
        return self.period[(j - len(self.preperiod)) % len(self.period)]

    def symbols(self, n: int) -> list[int]:
        return [self.symbol(j) for j in range(n)]

    def shift(self, n: int = 1) -> "Address":
        a = self
        for _ in range(n):
            if a.preperiod:
                a = Address(a.preperiod[1:], a.period)
            else:
                a = Address((), a.period[1:] + a.period[:1])
        return a


@dataclass
class Ray:
    address: Address
    parameter: Parameter
    t: np.ndarray  # potential-like parameter, decreasing
    z: np.ndarray
    depth: int
    landing: Optional[complex] = None
    band: np.ndarray = field(default=None, repr=False)
    u: np.ndarray = field(default=None, repr=False)

    @property
    def vertices(self):
        return list(zip(self.t.tolist(), self.z.tolist()))

    @property
    def innermost(self) -> complex:
        return complex(self.z[-1])


def tail_height(p: Parameter, symbol: int) -> float:
    return TWO_PI * symbol - p.argument


def _band_x(p: Parameter, address: Address, band: int, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if band == 0:
        return T_TAIL + TAIL_LENGTH * u
    h = tail_height(p, address.symbol(band))
    # u=1 pulls back to exactly Re = T_TAIL one level up
    top = math.sqrt((p.modulus * math.exp(T_TAIL)) ** 2 - h * h)
    return np.exp(math.log(T_TAIL) + u * (math.log(top) - math.log(T_TAIL)))


def _band_potential(band: int, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if band == 0:
        return T_TAIL + TAIL_LENGTH * u
    a_prev = T_TAIL
    for _ in range(band - 1):
        a_prev = math.log1p(a_prev)
    a = math.log1p(a_prev)
    return a + (a_prev - a) * u


@functools.lru_cache(maxsize=256)
def landing_orbit(p: Parameter, address: Address) -> tuple:
    """Anchor points l_j (j < len(preperiod) + len(period)) that the ray's
    pulled-back vertices converge to; zeros when inverse iteration fails.

    Vertices are pulled back as offsets from these anchors so that points
    extremely close to the landing orbit keep full relative precision.
    """
    pre, per = address.preperiod, address.period
    q = len(per)
    n = len(pre) + q
    z = complex(T_TAIL, tail_height(p, per[0]))
    prev = None
    for _ in range(5000):
        for s in reversed(per):
            if z == 0:
                return (0j,) * n
            z = inverse_branch(p, s, z)
        if prev is not None and abs(z - prev) <= 4e-16 * (1.0 + abs(z)):
            break
        prev = z
    else:
        return (0j,) * n
    cycle = [z]
    w = z
    for s in reversed(per[1:]):
        w = inverse_branch(p, s, w)
        cycle.append(w)
    # cycle[i] holds the anchor for level len(pre) + (q - i) % q
    anchors = [0j] * n
    anchors[len(pre)] = z
    for i in range(1, q):
        anchors[len(pre) + q - i] = cycle[i]
    w = z
    for j in range(len(pre) - 1, -1, -1):
        if w == 0:
            return (0j,) * n
        w = inverse_branch(p, pre[j], w)
        anchors[j] = w
    return tuple(anchors)


def _anchor(address: Address, anchors: tuple, level: int) -> complex:
    pre = len(address.preperiod)
    if level < pre:
        return anchors[level]
    return anchors[pre + (level - pre) % len(address.period)]


def pull_back(p: Parameter, address: Address, level: int, w: np.ndarray) -> np.ndarray:
    """Apply L_{s_0} o ... o L_{s_{level-1}} to points ``w`` at level ``level``."""
    w = np.asarray(w, dtype=complex)
    anchors = landing_orbit(p, address)
    a_cur = _anchor(address, anchors, level)
    delta = w - a_cur
    for j in range(level - 1, -1, -1):
        a_prev = _anchor(address, anchors, j)
        full = a_cur + delta
        if np.any(np.abs(full) < DELTA_0):
            raise PullbackCollision(f"pull-back passed within {DELTA_0} of 0 at level {j + 1}")
        standard = inverse_branch_array(p, address.symbol(j), full)
        if a_cur != 0:
            ratio = delta / a_cur
            small = np.abs(ratio) < 0.5
            offset = np.asarray(log1p_complex(ratio))
            close = np.abs(a_prev + offset - standard) <= 1e-8 * (1.0 + np.abs(standard))
            delta = np.where(small & close, offset, standard - a_prev)
        else:
            delta = standard - a_prev
        a_cur = a_prev
    return a_cur + delta


def ray_points(p: Parameter, address: Address, band: int, u) -> np.ndarray:
    """Exact (tail-model) ray points for band ``band`` at parameters ``u``."""
    x = _band_x(p, address, band, u)
    w = x + 1j * tail_height(p, address.symbol(band))
    return pull_back(p, address, band, w)


def _refine_band(p, address, band, u, step_max):
    z = ray_points(p, address, band, u)
    for _ in range(_MAX_REFINE):
        gaps = np.abs(np.diff(z)) > step_max
        if not gaps.any():
            break
        idx = np.nonzero(gaps)[0]
        mids = 0.5 * (u[idx] + u[idx + 1])
        zm = ray_points(p, address, band, mids)
        u = np.insert(u, idx + 1, mids)
        z = np.insert(z, idx + 1, zm)
    return u, z


def _check_bounded_entries(address: Address, depth: int):
    big = [s for s in address.symbols(depth + 1) if abs(s) > S_MAX]
    if big:
        raise ValueError(f"address entries {big} exceed S_MAX={S_MAX}")


def trace_ray(
    p: Parameter,
    s: Address,
    depth: int,
    t_min: float = 1e-9,
    step_max: float = STEP_MAX,
) -> Ray:
    """Trace the ray with address ``s`` using ``depth`` pull-back levels.

    Band d of the ray is the d-fold pull-back of the straight tail at level d;
    bands join at Re = T_TAIL one level up, so successive depths share all
    outer vertices. Vertices are ordered from +infinity inwards.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if t_min <= 0:
        raise ValueError("t_min must be positive")
    _check_bounded_entries(s, depth)

    ts, zs, bands, us = [], [], [], []
    n0 = int(math.ceil(TAIL_LENGTH / TAIL_STEP)) + 1
    for band in range(depth + 1):
        if band == 0:
            u0 = np.linspace(0.0, 1.0, n0)
        else:
            u0 = np.linspace(0.0, 1.0, _BAND_SEED)
        u, z = _refine_band(p, s, band, u0, step_max)
        if band > 0:
            u, z = u[:-1], z[:-1]  # u=1 duplicates the previous band's inner end
        t = _band_potential(band, u)
        keep = t >= t_min
        ts.append(t[keep][::-1])
        zs.append(z[keep][::-1])
        bands.append(np.full(int(keep.sum()), band))
        us.append(u[keep][::-1])

    # neighbouring bands must agree where they meet
    worst = 0.0
    for band in range(1, depth + 1):
        outer = ray_points(p, s, band, np.array([1.0]))[0]
        inner = ray_points(p, s, band - 1, np.array([0.0]))[0]
        worst = max(worst, abs(outer - inner))
    if worst > EPS_RAY:
        raise DepthInsufficient(f"band mismatch {worst:.3e} exceeds {EPS_RAY}")

    return Ray(
        address=s,
        parameter=p,
        t=np.concatenate(ts),
        z=np.concatenate(zs),
        depth=depth,
        band=np.concatenate(bands),
        u=np.concatenate(us),
    )


def innermost_points(p: Parameter, s: Address, depth: int) -> np.ndarray:
    """Innermost vertex of the ray traced at each depth 1..depth."""
    _check_bounded_entries(s, depth)
    return np.array(
        [ray_points(p, s, n, np.array([0.0]))[0] for n in range(1, depth + 1)]
    )


def _aitken(p: Parameter, s: Address, depth: int) -> complex:
    q = len(s.period)
    depths = [n for n in range(depth, 0, -q)][:7]
    if len(depths) < 3:
        raise NoConvergence("depth too small to extrapolate the landing point")
    seq = [complex(ray_points(p, s, n, np.array([0.0]))[0]) for n in depths]
    diffs = [abs(seq[i] - seq[i + 1]) for i in range(len(seq) - 1)]
    noise = 1e-13 * (1.0 + abs(seq[0]))
    for i in range(min(5, len(diffs) - 1)):
        if diffs[i] <= noise:
            continue
        if diffs[i] > 0.9 * diffs[i + 1]:
            raise NoConvergence(
                f"innermost vertices contract by {diffs[i] / diffs[i + 1]:.3f} > 0.9"
            )
    w0, w1, w2 = seq[0], seq[1], seq[2]
    d1, d2 = w0 - w1, w1 - w2
    denom = d1 - d2
    if abs(d1) <= noise or denom == 0:
        return w0
    return w0 - d1 * d1 / denom


def _extrapolate(p: Parameter, s: Address, depth: int, max_depth: int = MAX_LANDING_DEPTH) -> complex:
    """Aitken-extrapolated landing point; the depth is raised in steps of
    ten periods until two estimates agree to 1e-13 (slowly contracting
    landing points need far more levels than the ray itself)."""
    _check_bounded_entries(s, max(depth, max_depth))
    est = _aitken(p, s, depth)
    d = depth
    step = 10 * len(s.period)
    while d + step <= max_depth:
        d += step
        nxt = _aitken(p, s, d)
        if abs(nxt - est) <= 1e-13 * (1.0 + abs(nxt)):
            return nxt
        est = nxt
    return est


def landing_point(r: Ray, p: Optional[Parameter] = None) -> complex:
    """Extrapolate the landing point from innermost vertices across depths."""
    p = p or r.parameter
    r.landing = _extrapolate(p, r.address, r.depth)
    return r.landing


def _candidates(search_bound: int, max_len: int):
    entries = range(-search_bound, search_bound + 1)
    seen = set()
    for total in range(1, max_len + 1):
        batch = []
        for plen in range(total):
            klen = total - plen
            for word in itertools.product(entries, repeat=total):
                a = Address(word[:plen], word[plen:])
                if (len(a.preperiod), len(a.period)) != (plen, klen) or a in seen:
                    continue
                seen.add(a)
                batch.append(a)
        batch.sort(key=lambda a: (max(abs(v) for v in a.preperiod + a.period),
                                  len(a.preperiod),
                                  [abs(v) for v in a.preperiod + a.period],
                                  a.preperiod + a.period))
        yield from batch


def find_ray_landing_at(
    p: Parameter,
    target: complex,
    search_bound: int,
    depth: int = 30,
    max_len: int = L_MAX,
    tol: float = EPS_LAND,
) -> Address:
    """Search small eventually periodic addresses for a ray landing at ``target``.

    Candidates whose symbols agree with the static itinerary of ``target`` are
    tried first; the rest follow in the same order.
    """
    from .symbolic import StaticPartition, static_strip_index

    if search_bound < 1:
        raise ValueError("search_bound must be >= 1")
    target = complex(target)
    sp = StaticPartition(p)
    itin = []
    w = target
    try:
        for _ in range(2 * max_len):
            itin.append(static_strip_index(sp, w))
            w = eval_map(p, w)
    except (BoundaryHit, OverflowGuard):
        pass

    def consistent(a: Address) -> bool:
        n = min(len(itin), len(a.preperiod) + 2 * len(a.period))
        return a.symbols(n) == itin[:n]

    cands = list(_candidates(search_bound, max_len))
    ordered = [a for a in cands if consistent(a)] + [a for a in cands if not consistent(a)]
    for a in ordered:
        d = max(depth, len(a.preperiod) + 4 * len(a.period) + 1)
        try:
            land = _extrapolate(p, a, d)
        except (NoConvergence, PullbackCollision):
            continue
        if abs(land - target) < tol:
            return a
    raise NotFound(f"no ray with |entries| <= {search_bound} lands at {target}")
