"""File formats: PGM images, ray CSV, itinerary JSON lines, cycle JSON,
``key = value`` config files and the on-disk ray cache."""
from __future__ import annotations

import json
import os
import re
from pathlib import Path

import numpy as np

from .core import Parameter
from .rays import Address, Ray

_HEADER_RE = re.compile(
    r"^#\s*address=(?P<addr>\S*)\s+lambda=(?P<re>\S+),(?P<im>\S+)\s+depth=(?P<depth>\d+)\s*$"
)


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or parts[2] != b"255":
        raise ValueError(f"{path} is not an 8-bit binary PGM written by write_pgm")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w).copy()


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def write_ray_csv(path, ray: Ray) -> None:
    lam = ray.parameter.lam
    lines = [
        f"# address={ray.address} lambda={_g17(lam.real)},{_g17(lam.imag)} depth={ray.depth}",
        "t,re,im",
    ]
    for t, z in zip(ray.t.tolist(), ray.z.tolist()):
        lines.append(f"{_g17(t)},{_g17(z.real)},{_g17(z.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_curve_csv(path, curve: np.ndarray, address: str, p: Parameter, depth: int) -> None:
    """Preimage curves use the ray layout; t is the vertex index."""
    lam = p.lam
    lines = [
        f"# address={address} lambda={_g17(lam.real)},{_g17(lam.imag)} depth={depth}",
        "t,re,im",
    ]
    for i, z in enumerate(np.asarray(curve, dtype=complex).tolist()):
        lines.append(f"{i},{_g17(z.real)},{_g17(z.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_ray_csv(path) -> Ray:
    text = Path(path).read_text().splitlines()
    m = _HEADER_RE.match(text[0]) if text else None
    if m is None:
        raise ValueError(f"{path}: missing ray header line")
    rows = [ln for ln in text[1:] if ln and not ln.startswith("#") and ln != "t,re,im"]
    data = np.array([[float(v) for v in ln.split(",")] for ln in rows]).reshape(-1, 3)
    p = Parameter(complex(float(m["re"]), float(m["im"])))
    return Ray(
        address=Address.parse(m["addr"]),
        parameter=p,
        t=data[:, 0].copy(),
        z=data[:, 1] + 1j * data[:, 2],
        depth=int(m["depth"]),
    )


def itinerary_json_line(z: complex, itin) -> str:
    return json.dumps(itin.to_json(z))


def cycle_json(cycle) -> str:
    return json.dumps(cycle.to_json())


def read_config(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment, dashes in keys
    become underscores so keys match the command-line flags."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def cache_key(p: Parameter, address: Address, depth: int) -> str:
    # distinct stand-ins keep different addresses from colliding
    addr = str(address).replace("|", "I").replace(",", "c")
    raw = f"lam_{p.lam.real!r}_{p.lam.imag!r}_addr_{addr}_depth_{depth}".replace("-", "m")
    return re.sub(r"[^A-Za-z0-9._]", "_", raw) + ".csv"


def cached_ray(cache_dir, p: Parameter, address: Address, depth: int, trace):
    """Return the cached ray, or call ``trace()`` and store its result."""
    path = Path(cache_dir) / cache_key(p, address, depth)
    if path.exists():
        return read_ray_csv(path)
    ray = trace()
    path.parent.mkdir(parents=True, exist_ok=True)
    # write then rename so readers never see a partial file
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    write_ray_csv(tmp, ray)
    os.replace(tmp, path)
    return ray
