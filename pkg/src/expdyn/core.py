"""Evaluation of the exponential map E(z) = lam * exp(z), its inverse branches
and horizon-bounded orbit classification."""
from __future__ import annotations

import cmath
import enum
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import OverflowGuard, ZeroPreimage, BoundaryHit

TWO_PI = 2.0 * math.pi

# exp() leaves the binary64 range just above 709.78
T_OVF = 700.0
T_ESC = 50.0
R_BOUND = 1.0e4


@dataclass(frozen=True)
class Parameter:
    lam: complex
    modulus: float = field(init=False)
    argument: float = field(init=False)

    def __post_init__(self):
        lam = complex(self.lam)
        if lam == 0:
            raise ValueError("lambda must be nonzero")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "modulus", abs(lam))
        object.__setattr__(self, "argument", cmath.phase(lam))

    @property
    def log_lam(self) -> complex:
        return complex(math.log(self.modulus), self.argument)

    def __str__(self):
        return format_complex(self.lam)


_COMPLEX_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"(?:\s*([+-])\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*[ij])?\s*$"
)


def parse_complex(text: str) -> complex:
    """Parse ``<re>+<im>i`` (also ``<re>``, ``<re>-<im>j``, or python syntax)."""
    s = text.strip()
    m = _COMPLEX_RE.match(s)
    if m:
        re_part = float(m.group(1))
        if m.group(2) is None:
            return complex(re_part, 0.0)
        im = float(m.group(3)) if m.group(3) is not None else 1.0
        return complex(re_part, -im if m.group(2) == "-" else im)
    try:
        return complex(s.replace("i", "j").replace(" ", ""))
    except ValueError:
        raise ValueError(f"cannot parse complex number {text!r}") from None


def format_complex(z: complex) -> str:
    z = complex(z)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


class Classification(enum.Enum):
    EscapingByHorizon = "escaping-by-horizon"
    BoundedByHorizon = "bounded-by-horizon"
    Undecided = "undecided"
    BoundaryHit = "boundary-hit"


@dataclass(frozen=True)
class OrbitRecord:
    start: complex
    points: tuple
    classification: Classification
    escape_step: Optional[int] = None


def reduce_imag(y):
    """Im part folded into [-pi, pi] by multiples of TWO_PI.

    exp is evaluated on the folded value so that the map is exactly
    TWO_PI-periodic in floating point; E(2 pi i) = 2 pi i then holds exactly
    for lam = 2 pi i, instead of picking up sin(TWO_PI) ~ -2.4e-16.
    """
    return y - TWO_PI * np.round(y / TWO_PI)


def eval_map(p: Parameter, z: complex) -> complex:
    """Return lam*exp(z); this is also the derivative at z."""
    z = complex(z)
    if z.real > T_OVF:
        raise OverflowGuard(f"Re(z)={z.real} exceeds overflow guard {T_OVF}")
    y = z.imag - TWO_PI * round(z.imag / TWO_PI)
    return p.lam * cmath.exp(complex(z.real, y))


derivative = eval_map


def eval_map_array(p: Parameter, z: np.ndarray) -> np.ndarray:
    """Vectorised E over an array; entries beyond the guard map to nan."""
    z = np.asarray(z, dtype=complex)
    out = np.full(z.shape, complex(np.nan, np.nan))
    ok = z.real <= T_OVF
    w = z[ok]
    out[ok] = p.lam * np.exp(w.real + 1j * reduce_imag(w.imag))
    return out


def branch_interval(p: Parameter, k: int) -> tuple[float, float]:
    """Half-open interval (lo, hi] of Im(z) covered by branch/strip k."""
    return ((2 * k - 1) * math.pi - p.argument, (2 * k + 1) * math.pi - p.argument)


def inverse_branch(p: Parameter, k: int, w: complex) -> complex:
    w = complex(w)
    if w == 0:
        raise ZeroPreimage("0 is an omitted value of the exponential map")
    return cmath.log(w) - p.log_lam + complex(0.0, TWO_PI * k)


def inverse_branch_array(p: Parameter, k: int, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if np.any(w == 0):
        raise ZeroPreimage("0 is an omitted value of the exponential map")
    return np.log(w) - p.log_lam + 1j * (TWO_PI * k)


def iterate_orbit(
    p: Parameter,
    z: complex,
    horizon: int,
    t_esc: float = T_ESC,
    classifier: Optional[Callable[[complex], object]] = None,
    r_bound: float = R_BOUND,
) -> OrbitRecord:
    """Iterate until escape past ``t_esc``, the horizon, or a boundary event.

    ``classifier`` is called on every iterate; raising :class:`BoundaryHit`
    (or returning ``False``) ends the orbit as ``BoundaryHit``.
    The result is a horizon classification, not a proof of escape.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not (50.0 <= t_esc <= T_OVF):
        raise ValueError(f"t_esc must lie in [50, {T_OVF}]")
    z = complex(z)
    pts = [z]
    bounded = abs(z) <= r_bound
    for step in range(horizon + 1):
        cur = pts[-1]
        if cur.real > t_esc:
            return OrbitRecord(z, tuple(pts), Classification.EscapingByHorizon, step)
        if classifier is not None:
            try:
                ok = classifier(cur)
            except BoundaryHit:
                ok = False
            if ok is False:
                return OrbitRecord(z, tuple(pts), Classification.BoundaryHit)
        if step == horizon:
            break
        nxt = eval_map(p, cur)
        bounded = bounded and abs(nxt) <= r_bound
        pts.append(nxt)
    cls = Classification.BoundedByHorizon if bounded else Classification.Undecided
    return OrbitRecord(z, tuple(pts), cls)


def circle_image_check(p: Parameter, rho: float, samples: int) -> float:
    """Max relative deviation of |E(rho + iy)| from |lam| e^rho over sampled y."""
    if samples < 8:
        raise ValueError("samples must be >= 8")
    if rho > T_OVF:
        raise OverflowGuard(f"rho={rho} exceeds overflow guard")
    ys = np.linspace(-4 * math.pi, 4 * math.pi, samples)
    radius = p.modulus * math.exp(rho)
    err = 0.0
    for y in ys:
        err = max(err, abs(abs(eval_map(p, complex(rho, y))) - radius) / radius)
    return err


def tower_log(abs_lam: float, x: float, j: int) -> float:
    """log of E_{|lam|}^j(x) for real x, staying finite as long as possible.

    Uses log E^{j} = log|lam| + E^{j-1}; returns inf once that overflows.
    """
    if j == 0:
        return math.log(x) if x > 0 else -math.inf
    val = x
    for _ in range(j - 1):
        if val > T_OVF:
            return math.inf
        val = abs_lam * math.exp(val)
    return math.log(abs_lam) + val


def tower(abs_lam: float, x: float, j: int) -> float:
    """E_{|lam|}^j(x) in linear scale, inf when not representable."""
    lg = tower_log(abs_lam, x, j)
    if j == 0:
        return x
    return math.exp(lg) if lg < T_OVF else math.inf


def orbit_points(p: Parameter, z: complex, n: int) -> list[complex]:
    """Plain forward orbit z, E(z), ..., E^n(z); raises OverflowGuard."""
    pts = [complex(z)]
    for _ in range(n):
        pts.append(eval_map(p, pts[-1]))
    return pts


def prod(values: Sequence[complex]) -> complex:
    out = complex(1.0)
    for v in values:
        out *= v
    return out


def log1p_complex(u):
    """Accurate log(1+u) for complex u (scalar or array), small |u| included."""
    u = np.asarray(u, dtype=complex)
    x, y = u.real, u.imag
    with np.errstate(divide="ignore", invalid="ignore"):
        re = 0.5 * np.log1p(2.0 * x + x * x + y * y)
    im = np.arctan2(y, 1.0 + x)
    out = re + 1j * im
    return complex(out) if out.ndim == 0 else out
