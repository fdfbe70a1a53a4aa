"""Command-line surface: simulate episodes, inspect corners and flow, report stats.

Exit codes: 0 success, 1 runtime failure, 2 usage/config/parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from flowhold import telemetry
from flowhold.config import PRESET_NAMES, ConfigError, config_digest, load_run_config
from flowhold.corners import DetectParams, Rect, detect_corners
from flowhold.flow import LkParams, build_pyramid, track_points
from flowhold.image import GrayImage, PgmError, load_pgm, save_pgm
from flowhold.sim import run_episode
from flowhold.tracker import center_roi

_D = DetectParams()
_L = LkParams()


def _read_pgm(path: str) -> GrayImage:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"image file not found: {p}")
    return load_pgm(p.read_bytes())


def _parse_set(pairs: list[str]) -> dict[str, dict[str, object]]:
    tree: dict[str, dict[str, object]] = {}
    for pair in pairs:
        if "=" not in pair or "." not in pair.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.field=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        section, field = key.split(".", 1)
        try:
            value: object = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        tree.setdefault(section, {})[field] = value
    return tree


def cmd_simulate(args: argparse.Namespace) -> int:
    overrides = _parse_set(args.set or [])
    sim_over = overrides.setdefault("sim", {})
    if args.duration is not None:
        sim_over["duration"] = args.duration
    if args.yaw_rate is not None:
        sim_over["yaw_rate"] = args.yaw_rate
    if args.texture_seed is not None:
        sim_over["texture_seed"] = args.texture_seed

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = [None]
    if args.sweep is not None:
        base = sim_over.get("texture_seed")
        if base is None:
            rc0 = load_run_config(args.preset, args.config, overrides)
            base = rc0.sim.texture_seed
        seeds = [int(base) + i for i in range(args.sweep)]

    for seed in seeds:
        if seed is not None:
            sim_over["texture_seed"] = seed
        rc = load_run_config(args.preset, args.config, overrides)
        records = run_episode(rc.sim, rc.gains, rc.tracker_config())
        settle = rc.sim.settle_time
        if rc.sim.duration < settle + 2.0 / rc.sim.camera_rate:
            settle = 0.0  # runs shorter than the settle window report everything
        report = telemetry.dispersion_stats(
            records, settle_time=settle, frame_size_cm=rc.sim.frame_size_cm
        )
        target = out_dir if seed is None else out_dir / f"seed_{seed}"
        target.mkdir(parents=True, exist_ok=True)
        (target / "telemetry.csv").write_bytes(telemetry.write_csv(records))
        (target / "summary.json").write_bytes(
            telemetry.write_summary_json(report, config_digest(rc))
        )
        print(
            f"preset={rc.preset or 'default'} seed={rc.sim.texture_seed} "
            f"frames={len(records)} two_sigma_radial={report.two_sigma_radial:.2f}cm "
            f"hold_diameter={report.hold_diameter:.2f}cm "
            f"blind_fraction={report.blind_fraction:.3f}"
        )
    return 0


def cmd_corners(args: argparse.Namespace) -> int:
    image = _read_pgm(args.image)
    params = DetectParams(
        max_corners=args.max,
        quality_level=args.quality,
        min_distance=args.min_distance,
        window_radius=args.window_radius,
    )
    if args.roi == "center":
        roi = center_roi(image.width, image.height)
    else:
        roi = Rect(0, 0, image.width, image.height)
    corners = detect_corners(image, roi, params)
    for c in corners:
        print(f"{c.x} {c.y} {c.response:.9g}")
    if args.annotate:
        px = image.pixels.copy()
        for c in corners:
            y0, y1 = max(c.y - 1, 0), min(c.y + 2, image.height)
            x0, x1 = max(c.x - 1, 0), min(c.x + 2, image.width)
            px[y0:y1, x0:x1] = 1.0
        Path(args.annotate).write_bytes(save_pgm(GrayImage(px)))
    return 0


def cmd_flow(args: argparse.Namespace) -> int:
    prev = _read_pgm(args.prev)
    next_ = _read_pgm(args.next)
    if prev.width != next_.width or prev.height != next_.height:
        raise ConfigError(
            f"image sizes differ: {prev.width}x{prev.height} vs {next_.width}x{next_.height}"
        )
    params = LkParams(
        window_radius=args.window_radius,
        pyramid_levels=args.levels,
        max_iterations=args.iterations,
        epsilon=args.epsilon,
    )
    if args.auto:
        detected = detect_corners(
            prev, Rect(0, 0, prev.width, prev.height), DetectParams()
        )
        margin = params.window_radius + 1
        points = [
            (float(c.x), float(c.y))
            for c in detected
            if margin <= c.x <= prev.width - 1 - margin
            and margin <= c.y <= prev.height - 1 - margin
        ]
    else:
        points = []
        for spec_ in args.point or []:
            try:
                xs, ys = spec_.split(",")
                points.append((float(xs), float(ys)))
            except ValueError:
                raise ConfigError(f"--point expects x,y, got {spec_!r}") from None
    if not points:
        return 0
    prev_pyr = build_pyramid(prev, params.pyramid_levels)
    next_pyr = build_pyramid(next_, params.pyramid_levels)
    for (x0, y0), res in zip(points, track_points(prev_pyr, next_pyr, points, params)):
        status = "Tracked" if res.tracked else res.status.value
        residual = "nan" if np.isnan(res.residual) else format(res.residual, ".9g")
        print(
            f"{x0:.9g} {y0:.9g} -> {res.point[0]:.9g} {res.point[1]:.9g} "
            f"{status} {residual}"
        )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.telemetry)
    if not path.exists():
        raise ConfigError(f"telemetry file not found: {path}")
    records = telemetry.read_csv(path.read_bytes())
    report = telemetry.dispersion_stats(
        records, settle_time=args.settle, frame_size_cm=args.frame_size_cm
    )
    sys.stdout.write(telemetry.write_summary_json(report).decode("ascii"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowhold",
        description="Optical-flow position hold pipeline and hover simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a closed-loop hover episode")
    p.add_argument("--preset", choices=PRESET_NAMES, help="named config preset")
    p.add_argument("--config", help="JSON config file overriding the preset")
    p.add_argument("--set", action="append", metavar="SECTION.FIELD=VALUE",
                   help="single-field override, repeatable")
    p.add_argument("--duration", type=float, help="episode length in seconds")
    p.add_argument("--yaw-rate", dest="yaw_rate", type=float,
                   help="yaw drift rate in rad/s")
    p.add_argument("--texture-seed", dest="texture_seed", type=int,
                   help="ground texture seed")
    p.add_argument("--sweep", type=int, metavar="N",
                   help="run N episodes with consecutive seeds")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("corners", help="detect corners in a PGM image")
    p.add_argument("image", help="input PGM (binary P5)")
    p.add_argument("--max", type=int, default=_D.max_corners,
                   help=f"maximum corners (default: {_D.max_corners})")
    p.add_argument("--quality", type=float, default=_D.quality_level,
                   help=f"quality level relative to max response (default: {_D.quality_level})")
    p.add_argument("--min-distance", dest="min_distance", type=float,
                   default=_D.min_distance,
                   help=f"suppression distance in px (default: {_D.min_distance})")
    p.add_argument("--window-radius", dest="window_radius", type=int,
                   default=_D.window_radius,
                   help=f"structure tensor window radius (default: {_D.window_radius})")
    p.add_argument("--roi", choices=("full", "center"), default="full",
                   help="detection region (default: full)")
    p.add_argument("--annotate", metavar="OUT.PGM",
                   help="write a copy with 3x3 white markers at corners")
    p.set_defaults(func=cmd_corners)

    p = sub.add_parser("flow", help="track points between two PGM frames")
    p.add_argument("prev", help="earlier frame (PGM)")
    p.add_argument("next", help="later frame (PGM)")
    p.add_argument("--point", action="append", metavar="X,Y",
                   help="point to track, repeatable")
    p.add_argument("--auto", action="store_true",
                   help="track auto-detected corners instead of --point")
    p.add_argument("--window-radius", dest="window_radius", type=int,
                   default=_L.window_radius,
                   help=f"tracking window radius (default: {_L.window_radius})")
    p.add_argument("--levels", type=int, default=_L.pyramid_levels,
                   help=f"pyramid levels (default: {_L.pyramid_levels})")
    p.add_argument("--iterations", type=int, default=_L.max_iterations,
                   help=f"max iterations per level (default: {_L.max_iterations})")
    p.add_argument("--epsilon", type=float, default=_L.epsilon,
                   help=f"convergence step norm in px (default: {_L.epsilon})")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("report", help="recompute dispersion stats from telemetry CSV")
    p.add_argument("telemetry", help="telemetry.csv produced by simulate")
    p.add_argument("--settle", type=float, default=5.0,
                   help="seconds to exclude from the start (default: 5.0)")
    p.add_argument("--frame-size-cm", dest="frame_size_cm", type=float, default=58.0,
                   help="airframe tip-to-tip size in cm (default: 58.0)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PgmError, telemetry.CsvError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, not a usage problem
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
