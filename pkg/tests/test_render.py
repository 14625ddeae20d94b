import math

import numpy as np
import pytest

from expdyn.core import Classification, Parameter, iterate_orbit
from expdyn.render import (
    OVERLAY_LEVEL,
    UNDECIDED_LEVEL,
    RenderJob,
    escape_steps,
    figure_overlays,
    gray_level,
    overlay_pixels,
    render_escape_speed,
)


def test_job_validation():
    with pytest.raises(ValueError):
        RenderJob((0, 1, 0, 1), (0, 5))
    with pytest.raises(ValueError):
        RenderJob((1, 0, 0, 1), (5, 5))
    with pytest.raises(ValueError):
        RenderJob((0, 1, 0, 1), (5, 5), t_esc=10)


def test_gray_mapping():
    assert gray_level(0, 200) == 255
    assert gray_level(1, 200) == 254
    assert gray_level(200, 200) == 0
    levels = [gray_level(s, 200) for s in range(201)]
    assert all(b <= a for a, b in zip(levels, levels[1:]))


def test_single_pixel():
    p = Parameter(1)
    job = RenderJob((9.5, 10.5, -0.5, 0.5), (1, 1))
    img = render_escape_speed(p, job, workers=1)
    rec = iterate_orbit(p, job.pixel_center(0, 0), 200)
    assert job.pixel_center(0, 0) == 10
    assert img[0, 0] == gray_level(rec.escape_step, 200) == 254


def test_all_escaping_window():
    p = Parameter(1)
    job = RenderJob((10, 20, -1.5, 1.5), (40, 12))
    img = render_escape_speed(p, job, workers=2)
    assert np.all(img >= gray_level(3, 200))
    # constant along vertical lines for |Im| < pi/2
    assert np.all(img == img[0])
    rng = np.random.default_rng(0)
    for _ in range(16):
        r, c = int(rng.integers(12)), int(rng.integers(40))
        # direct iteration oracle
        z = job.pixel_center(r, c)
        step = 0
        while z.real <= 50:
            z = np.exp(z)
            step += 1
        assert img[r, c] == gray_level(step, 200)


def test_escape_steps_match_orbits():
    p = Parameter(2j * math.pi)
    rng = np.random.default_rng(1)
    z = rng.uniform(-4, 12, 300) + 1j * rng.uniform(-2, 14, 300)
    steps, undecided = escape_steps(p, z, 200)
    for zi, s, u in zip(z, steps, undecided):
        rec = iterate_orbit(p, zi, 200)
        if rec.classification == Classification.EscapingByHorizon:
            assert s == rec.escape_step
        else:
            assert s == -1
            assert u == (rec.classification == Classification.Undecided)


def test_levels_for_non_escaping():
    p = Parameter(2j * math.pi)
    # 0 -> 2 pi i is a fixed point; 10.5 + i pi/2 maps to a huge negative real
    job = RenderJob((-0.01, 0.01, -0.01, 0.01), (1, 1))
    assert render_escape_speed(p, job)[0, 0] == 0
    job = RenderJob((10.49, 10.51, 1.56, 1.58), (1, 1))
    assert render_escape_speed(p, job)[0, 0] == UNDECIDED_LEVEL


def test_overlay_rasterisation():
    job = RenderJob((0, 10, 0, 10), (10, 10), overlays=[np.array([0.5 + 0.5j, 9.5 + 9.5j])])
    reps = overlay_pixels(job)
    assert set(reps) == {(9 - i, i) for i in range(10)}
    assert reps[(9, 0)] == 0.5 + 0.5j
    img = render_escape_speed(Parameter(1), job, workers=1)
    assert all(img[r, c] == OVERLAY_LEVEL for r, c in reps)


def test_determinism_across_workers():
    p = Parameter(2j * math.pi)
    job = RenderJob((-4, 12, -2, 14), (120, 90))
    a = render_escape_speed(p, job, workers=1)
    b = render_escape_speed(p, job, workers=3)
    c = render_escape_speed(p, job, workers=3)
    assert a.tobytes() == b.tobytes() == c.tobytes()


def test_gamma_overlay_escapes():
    p = Parameter(2j * math.pi)
    job = RenderJob((-4, 12, -2, 14), (200, 200))
    lines, gamma, _ = figure_overlays(p, job)
    reps = overlay_pixels(RenderJob(job.window, job.resolution, overlays=lines[:1]))
    assert len(reps) > 100
    for z in reps.values():
        assert iterate_orbit(p, z, 200).classification == Classification.EscapingByHorizon
