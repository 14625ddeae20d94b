"""Command-line front end: ``expdyn <subcommand> --lambda <re>+<im>i ...``.

Exit status is 0 on success, 1 on a domain error and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import io
from .core import Parameter, format_complex, iterate_orbit, parse_complex
from .errors import ExpDynError


DEFAULTS = {
    "horizon": 200,
    "t_esc": 50.0,
    "threads": None,
    "json": False,
}


def _int_list(text: str) -> list:
    text = text.strip()
    return [int(v) for v in text.split(",")] if text else []


def _window(text: str) -> tuple:
    vals = tuple(float(v) for v in text.split(","))
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("window needs re_min,re_max,im_min,im_max")
    return vals


def _size(text: str) -> tuple:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("size must look like 800x800")
    return int(parts[0]), int(parts[1])


def _complex_arg(text: str) -> complex:
    try:
        return parse_complex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _bool_arg(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=_complex_arg, default=None,
                        help="parameter as <re>+<im>i")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--json", action="store_const", const=True, default=None,
                        help="machine-readable report")
    common.add_argument("--horizon", type=int, default=None, help="iteration horizon (200)")
    common.add_argument("--t-esc", dest="t_esc", type=float, default=None,
                        help="escape threshold on Re z (50)")
    common.add_argument("--threads", type=int, default=None, help="render workers (all cores)")
    common.add_argument("--config", default=None, help="key = value file; flags win")
    common.add_argument("--cache", default=None, help="ray cache directory")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="expdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    r = sub.add_parser("render", parents=[common], help="escape-speed image (PGM)")
    r.add_argument("--window", type=_window, default=None)
    r.add_argument("--size", type=_size, default=None)
    r.add_argument("--overlays", type=_bool_arg, nargs="?", const=True, default=None,
                   help="draw the hair landing at 0 and five of its preimage curves")
    r.add_argument("--gamma", default=None, help="address of the hair for overlays")
    r.add_argument("--depth", type=int, default=None)

    r = sub.add_parser("ray", parents=[common], help="trace a dynamic ray (CSV)")
    r.add_argument("--address", default=None)
    r.add_argument("--depth", type=int, default=None)

    r = sub.add_parser("orbit", parents=[common], help="forward orbit as JSON lines")
    r.add_argument("--z", type=_complex_arg, default=None)
    r.add_argument("--n", type=int, default=None)

    r = sub.add_parser("itinerary", parents=[common], help="itineraries as JSON lines")
    r.add_argument("--z", type=_complex_arg, action="append", default=None)
    r.add_argument("--n", type=int, default=None)
    r.add_argument("--gamma", default=None,
                   help="use the dynamic partition of this hair (default: static strips)")
    r.add_argument("--depth", type=int, default=None)

    r = sub.add_parser("periodic", parents=[common], help="repelling cycle with given itinerary")
    r.add_argument("--word", type=_int_list, default=None)
    r.add_argument("--tol", type=float, default=None)

    r = sub.add_parser("verify-misiurewicz", parents=[common], help="check 0 lands on a cycle")
    r.add_argument("--preperiod", type=int, default=None)
    r.add_argument("--period", type=int, default=None)

    r = sub.add_parser("probe-boxes", parents=[common], help="nested-box covering probe")
    r.add_argument("--prefix", type=_int_list, default=None)
    r.add_argument("--rho", type=float, default=None)
    r.add_argument("--levels", type=int, default=None)
    r.add_argument("--gamma", default=None)
    r.add_argument("--depth", type=int, default=None)

    r = sub.add_parser("fit-slope", parents=[common], help="slope sandwich of preimage curves")
    r.add_argument("--gamma", default=None)
    r.add_argument("--k", type=_int_list, default=None)
    r.add_argument("--depth", type=int, default=None)
    r.add_argument("--x-left", dest="x_left", type=float, default=None)
    return parser


SUB_DEFAULTS = {
    "render": {"window": (-4.0, 12.0, -2.0, 14.0), "size": (800, 800), "overlays": False,
               "gamma": "0|1", "depth": 30},
    "ray": {"address": None, "depth": 20},
    "orbit": {"z": None, "n": 20},
    "itinerary": {"z": None, "n": 10, "gamma": None, "depth": 30},
    "periodic": {"word": None, "tol": 1e-13},
    "verify-misiurewicz": {"preperiod": None, "period": None},
    "probe-boxes": {"prefix": None, "rho": None, "levels": 1, "gamma": None, "depth": 30},
    "fit-slope": {"gamma": "0|1", "k": [-2, -1, 0, 1, 2], "depth": 30, "x_left": -30.0},
}


REQUIRED = {
    "ray": ["address"],
    "orbit": ["z"],
    "itinerary": ["z"],
    "periodic": ["word"],
    "verify-misiurewicz": ["preperiod", "period"],
    "probe-boxes": ["prefix", "rho"],
}


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser, args) -> None:
    """Fill unset options from the config file, then from defaults."""
    sub = _subparser(parser, args.command)
    types = {a.dest: a for a in sub._actions}
    if args.config:
        try:
            cfg = io.read_config(args.config)
        except OSError as exc:
            sub.error(f"cannot read config: {exc}")
        except ValueError as exc:
            sub.error(str(exc))
        for key, raw in cfg.items():
            dest = "lam" if key == "lambda" else key
            if dest not in types:
                sub.error(f"unknown config key {key!r}")
            if getattr(args, dest, None) is not None:
                continue
            action = types[dest]
            try:
                if action.const is True and action.type is None:
                    value = _bool_arg(raw)
                elif action.type is not None:
                    value = action.type(raw)
                else:
                    value = raw
            except (ValueError, argparse.ArgumentTypeError) as exc:
                sub.error(f"config key {key!r}: {exc}")
            if isinstance(action, argparse._AppendAction):
                value = [value]
            setattr(args, dest, value)
    for key, value in {**DEFAULTS, **SUB_DEFAULTS[args.command]}.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.lam is None:
        sub.error("--lambda is required")
    for key in REQUIRED.get(args.command, []):
        if getattr(args, key) is None:
            sub.error(f"--{key.replace('_', '-')} is required")


def _emit(args, report: dict, text: str) -> None:
    print(json.dumps(report) if args.json else text)


def _trace(args, p, address, depth):
    from .rays import trace_ray

    if args.cache:
        return io.cached_ray(args.cache, p, address, depth, lambda: trace_ray(p, address, depth))
    return trace_ray(p, address, depth)


def _gamma_partition(args, p, x_left=-30.0):
    from .rays import Address, landing_point
    from .symbolic import build_dynamic_partition

    gamma = _trace(args, p, Address.parse(args.gamma), args.depth)
    landing_point(gamma, p)
    return build_dynamic_partition(p, gamma, x_left)


def cmd_render(args, p) -> int:
    from .render import RenderJob, figure_overlays, render_escape_speed

    job = RenderJob(tuple(args.window), tuple(args.size), args.horizon, args.t_esc)
    if args.overlays:
        lines, _, _ = figure_overlays(p, job, args.gamma, depth=args.depth)
        job = RenderJob(job.window, job.resolution, job.horizon, job.t_esc, lines)
    start = time.perf_counter()
    img = render_escape_speed(p, job, args.threads or os.cpu_count())
    elapsed = time.perf_counter() - start
    out = args.out or "render.pgm"
    io.write_pgm(out, img)
    report = {"out": out, "width": job.resolution[0], "height": job.resolution[1],
              "overlays": len(job.overlays), "seconds": elapsed}
    _emit(args, report, f"wrote {out} ({job.resolution[0]}x{job.resolution[1]}) in {elapsed:.2f} s")
    return 0


def cmd_ray(args, p) -> int:
    from .rays import Address, landing_point
    from .errors import NoConvergence

    address = Address.parse(args.address)
    ray = _trace(args, p, address, args.depth)
    try:
        landing = landing_point(ray, p)
    except NoConvergence:
        landing = None
    if args.out:
        io.write_ray_csv(args.out, ray)
    report = {
        "address": str(address),
        "depth": ray.depth,
        "vertices": int(len(ray.z)),
        "landing": None if landing is None else [landing.real, landing.imag],
        "out": args.out,
    }
    if args.json or args.out:
        land = "none" if landing is None else format_complex(landing)
        _emit(args, report, f"ray {address}: {len(ray.z)} vertices, landing {land}")
    else:
        sys.stdout.write(f"# address={address} lambda={p.lam.real!r},{p.lam.imag!r} "
                         f"depth={ray.depth}\nt,re,im\n")
        for t, z in zip(ray.t.tolist(), ray.z.tolist()):
            sys.stdout.write(f"{t:.17g},{z.real:.17g},{z.imag:.17g}\n")
    return 0


def cmd_orbit(args, p) -> int:
    rec = iterate_orbit(p, args.z, args.n, args.t_esc)
    lines = [json.dumps({"step": i, "z": [z.real, z.imag]}) for i, z in enumerate(rec.points)]
    lines.append(json.dumps({"classification": rec.classification.value,
                             "escape_step": rec.escape_step}))
    _write_lines(args.out, lines)
    return 0


def _write_lines(out, lines) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_itinerary(args, p) -> int:
    from .symbolic import StaticPartition, itinerary

    part = _gamma_partition(args, p) if args.gamma else StaticPartition(p)
    lines = []
    for z in args.z:
        it = itinerary(p, part, z, args.n, args.t_esc)
        lines.append(io.itinerary_json_line(z, it))
    _write_lines(args.out, lines)
    return 0


def cmd_periodic(args, p) -> int:
    from .points import find_periodic_point

    cycle = find_periodic_point(p, args.word, args.tol)
    if args.out:
        Path(args.out).write_text(io.cycle_json(cycle) + "\n")
    pts = ", ".join(format_complex(z) for z in cycle.points)
    _emit(args, cycle.to_json(),
          f"cycle [{pts}] multiplier {format_complex(cycle.multiplier)} "
          f"|multiplier| {abs(cycle.multiplier):.15g} residual {cycle.residual:g}")
    return 0


def cmd_verify(args, p) -> int:
    from .points import verify_misiurewicz

    data = verify_misiurewicz(p, args.preperiod, args.period)
    report = {
        "accepted": True,
        "preperiod": data.preperiod,
        "period": data.period,
        "residual": data.orbit_residual,
        "cycle": data.landing_cycle.to_json(),
    }
    _emit(args, report,
          f"accepted preperiod={data.preperiod} period={data.period} "
          f"residual {data.orbit_residual:g}")
    return 0


def cmd_probe(args, p) -> int:
    from .probe import probe_escape_boxes

    dp = _gamma_partition(args, p) if args.gamma else None
    rep = probe_escape_boxes(p, args.prefix, args.rho, args.levels, dp)
    text = "\n".join(
        f"level {lv.j}: covering {lv.covering} ({lv.samples} samples), "
        f"sector inequality {'pass' if lv.sector_inequality else 'fail'}, "
        f"sector condition {'pass' if lv.sector_condition else 'fail'}"
        + (", static boundaries" if lv.static_substitute else "")
        + (", analytic-only" if lv.analytic_only else "")
        for lv in rep.levels
    )
    _emit(args, rep.to_json(), text)
    return 0 if rep.passed else 1


def cmd_fit_slope(args, p) -> int:
    from .symbolic import fit_slope_bound

    dp = _gamma_partition(args, p, args.x_left)
    fits = [fit_slope_bound(dp, k) for k in args.k]
    report = {"fits": [{"k": f.k, "c": f.c, "d": f.d, "m": f.m, "holdout_ok": f.holdout_ok}
                       for f in fits]}
    text = "\n".join(f"k={f.k}: c={f.c:.6g} d={f.d:.6g} m={f.m:.4g} holdout "
                     f"{'ok' if f.holdout_ok else 'violated'}" for f in fits)
    _emit(args, report, text)
    return 0 if all(f.holdout_ok for f in fits) else 1


COMMANDS = {
    "render": cmd_render,
    "ray": cmd_ray,
    "orbit": cmd_orbit,
    "itinerary": cmd_itinerary,
    "periodic": cmd_periodic,
    "verify-misiurewicz": cmd_verify,
    "probe-boxes": cmd_probe,
    "fit-slope": cmd_fit_slope,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        p = Parameter(args.lam)
        return COMMANDS[args.command](args, p)
    except ExpDynError as exc:
        print(f"expdyn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"expdyn: invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
