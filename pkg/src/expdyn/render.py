"""Escape-speed rendering with polyline overlays.

Every pixel centre is iterated under E until its real part passes T_esc or
the horizon runs out.  Earlier escape is lighter.  Rows are independent, so
they are computed in fixed blocks on a thread pool and assembled at the end.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import R_BOUND, T_ESC, T_OVF, Parameter, reduce_imag

UNDECIDED_LEVEL = 32
OVERLAY_LEVEL = 255
# block size is fixed so the arithmetic per row never depends on worker count
ROW_BLOCK = 8


@dataclass(frozen=True)
class RenderJob:
    window: tuple  # (re_min, re_max, im_min, im_max)
    resolution: tuple  # (width, height)
    horizon: int = 200
    t_esc: float = T_ESC
    overlays: Sequence[np.ndarray] = field(default=(), compare=False)

    def __post_init__(self):
        re_min, re_max, im_min, im_max = (float(v) for v in self.window)
        w, h = (int(v) for v in self.resolution)
        if w < 1 or h < 1:
            raise ValueError("width and height must be >= 1")
        if not (re_min < re_max and im_min < im_max):
            raise ValueError("window must satisfy re_min < re_max and im_min < im_max")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not (50.0 <= self.t_esc <= T_OVF):
            raise ValueError(f"t_esc must lie in [50, {T_OVF}]")
        object.__setattr__(self, "window", (re_min, re_max, im_min, im_max))
        object.__setattr__(self, "resolution", (w, h))

    @property
    def pixel_size(self) -> tuple:
        re_min, re_max, im_min, im_max = self.window
        w, h = self.resolution
        return (re_max - re_min) / w, (im_max - im_min) / h

    def pixel_center(self, row: int, col: int) -> complex:
        re_min, _, _, im_max = self.window
        dx, dy = self.pixel_size
        return complex(re_min + (col + 0.5) * dx, im_max - (row + 0.5) * dy)

    def pixel_of(self, z: np.ndarray):
        """(row, col) integer arrays for points ``z``; -1 when outside."""
        z = np.asarray(z, dtype=complex)
        re_min, _, _, im_max = self.window
        dx, dy = self.pixel_size
        w, h = self.resolution
        col = np.floor((z.real - re_min) / dx)
        row = np.floor((im_max - z.imag) / dy)
        inside = (col >= 0) & (col < w) & (row >= 0) & (row < h) & np.isfinite(z)
        col = np.where(inside, col, -1).astype(np.int64)
        row = np.where(inside, row, -1).astype(np.int64)
        return row, col


def gray_level(escape_step: int, horizon: int) -> int:
    return 255 - (255 * min(escape_step, horizon)) // horizon


def escape_steps(
    p: Parameter, z: np.ndarray, horizon: int, t_esc: float = T_ESC, r_bound: float = R_BOUND
):
    """Escape step per point (-1 if none) and a flag for orbits that left
    the disc of radius ``r_bound`` without escaping (undecided)."""
    z = np.asarray(z, dtype=complex).ravel().copy()
    steps = np.full(z.size, -1, dtype=np.int64)
    left_disc = np.abs(z) > r_bound
    idx = np.arange(z.size)
    # |E(z)| = |lam| e^{Re z}, so leaving the disc is a test on Re z
    re_bound = math.log(r_bound / p.modulus)
    for step in range(horizon + 1):
        esc = z.real > t_esc
        if esc.any():
            steps[idx[esc]] = step
            keep = ~esc
            z, idx = z[keep], idx[keep]
        if step == horizon or z.size == 0:
            break
        left_disc[idx[z.real > re_bound]] = True
        z = p.lam * np.exp(z.real + 1j * reduce_imag(z.imag))
    return steps, left_disc & (steps < 0)


def _render_rows(p: Parameter, job: RenderJob, r0: int, r1: int) -> np.ndarray:
    re_min, _, _, im_max = job.window
    dx, dy = job.pixel_size
    w = job.resolution[0]
    xs = re_min + (np.arange(w) + 0.5) * dx
    ys = im_max - (np.arange(r0, r1) + 0.5) * dy
    grid = xs[None, :] + 1j * ys[:, None]
    steps, undecided = escape_steps(p, grid, job.horizon, job.t_esc)
    h = job.horizon
    levels = 255 - (255 * np.minimum(steps, h)) // h
    levels = np.where(steps < 0, 0, levels)
    levels = np.where(undecided, UNDECIDED_LEVEL, levels)
    return levels.astype(np.uint8).reshape(r1 - r0, w)


def overlay_pixels(job: RenderJob) -> dict:
    """Map (row, col) -> representative overlay point inside that pixel.

    Each polyline is walked in order and a pixel keeps the first point that
    falls in it; gaps between consecutive points are bridged with a DDA walk
    whose interpolated samples stand in for the missing curve points.
    """
    reps: dict = {}
    for line in job.overlays:
        line = np.asarray(line, dtype=complex)
        if line.size == 0:
            continue
        rows, cols = job.pixel_of(line)
        re_min, _, _, im_max = job.window
        dx, dy = job.pixel_size
        for i in range(line.size):
            if rows[i] >= 0:
                reps.setdefault((int(rows[i]), int(cols[i])), complex(line[i]))
            if i + 1 == line.size:
                break
            a, b = line[i], line[i + 1]
            # DDA in pixel units between a and b
            ca, ra = (a.real - re_min) / dx, (im_max - a.imag) / dy
            cb, rb = (b.real - re_min) / dx, (im_max - b.imag) / dy
            n = int(math.ceil(max(abs(cb - ca), abs(rb - ra))))
            for s in range(1, n):
                t = s / n
                q = a + t * (b - a)
                r, c = job.pixel_of(np.array([q]))
                if r[0] >= 0:
                    reps.setdefault((int(r[0]), int(c[0])), complex(q))
    return reps


def render_escape_speed(
    p: Parameter, job: RenderJob, workers: Optional[int] = None
) -> np.ndarray:
    """Gray-level image (height x width, uint8, top row first)."""
    height = job.resolution[1]
    blocks = [(r, min(r + ROW_BLOCK, height)) for r in range(0, height, ROW_BLOCK)]
    workers = workers or os.cpu_count() or 1
    if workers == 1:
        parts = [_render_rows(p, job, a, b) for a, b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: _render_rows(p, job, *ab), blocks))
    img = np.concatenate(parts, axis=0)
    for (r, c) in overlay_pixels(job):
        img[r, c] = OVERLAY_LEVEL
    return img


def figure_overlays(p: Parameter, job: RenderJob, gamma_address="0|1",
                    ks: Sequence[int] = (-1, 0, 1, 2, 3), depth: int = 30):
    """The hair gamma landing at 0 and its preimage curves, resampled finer
    than half a pixel and ordered from +infinity inwards."""
    from .rays import Address, trace_ray, landing_point
    from .symbolic import build_dynamic_partition

    step = 0.5 * min(job.pixel_size)
    addr = gamma_address if isinstance(gamma_address, Address) else Address.parse(gamma_address)
    gamma = trace_ray(p, addr, depth, step_max=step)
    landing_point(gamma)
    x_left = min(job.window[0] - 1.0, -1.0)
    dp = build_dynamic_partition(p, gamma, x_left, step_max=step)
    lines = [gamma.z]
    for k in ks:
        lines.append(dp.preimage_curve(k)[::-1])
    return lines, gamma, dp
