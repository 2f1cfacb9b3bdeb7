"""Command-line pipelines.

Every subcommand writes its outputs plus a ``manifest.json`` into the output
directory (the parent directory when ``--out`` names a file).  The manifest
embeds the configuration actually used, so ``slr replay MANIFEST --out DIR``
reproduces the outputs.

Exit codes: 0 on success, 1 for usage or invalid input, 2 when processing
fails.  Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io as cloud_io
from .cloud import PointCloud
from .errors import SLRError
from .nss import (
    CLASS_FILTERS,
    distance_counts,
    pulse_sized_bins,
    DistanceHistogram,
    write_histograms_csv,
)
from .scan import GroundIndex, ScannerConfig, simulate_scan, slr
from .scenes import SceneConfig, generate_dense_scene
from .selection import (
    AzimuthProfile,
    SelectionConfig,
    candidate_cells,
    compute_azimuth_profile,
    compute_minimum_profile,
    load_profile,
    select_positions,
    store_profile,
)
from .validation import run_experiment, write_records_csv

MANIFEST = "manifest.json"


class InputError(Exception):
    """Bad usage, configuration or input file; exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _version() -> str:
    try:
        return metadata.version("slr")
    except metadata.PackageNotFoundError:
        return "unknown"


def _read_json(path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON: {e}") from None


def _config(path, cls):
    data = _read_json(path)
    try:
        return cls.from_dict(data)
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: {e}") from None


def _load(path, fmt=None) -> PointCloud:
    try:
        return cloud_io.load_cloud(path, fmt)
    except (OSError, ValueError) as e:
        raise InputError(str(e)) from None


def _vector(text: str, n: int, name: str) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise InputError(f"--{name} expects {n} comma-separated numbers, got {text!r}") from None
    if v.shape != (n,):
        raise InputError(f"--{name} expects {n} comma-separated numbers, got {text!r}")
    return v


def _out_dir(out: str, is_dir: bool) -> Path:
    d = Path(out) if is_dir else Path(out).resolve().parent
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_manifest(out_dir: Path, args, configs: dict, outputs: list, started: float) -> None:
    recorded = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = {
        "command": args.command,
        "args": recorded,
        "configs": configs,
        "seed": getattr(args, "seed", None),
        "inputs": [str(p) for p in _inputs(args)],
        "outputs": [str(p) for p in outputs],
        "version": _version(),
        "duration_s": round(time.time() - started, 3),
    }
    with open(out_dir / MANIFEST, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _inputs(args):
    for key in ("cloud", "clouds", "positions", "profile"):
        val = getattr(args, key, None)
        if val is None:
            continue
        yield from (val if isinstance(val, list) else [val])


# -- subcommands ---------------------------------------------------------------

def cmd_gen_scene(args) -> tuple[dict, list]:
    cfg = _config(args.config, SceneConfig)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out = Path(args.out)
    cloud = generate_dense_scene(cfg)
    cloud_io.store_cloud(cloud, out, args.format)
    return {"config": cfg.to_dict()}, [out]


def cmd_scan(args) -> tuple[dict, list]:
    cfg = _config(args.config, ScannerConfig)
    cloud = _load(args.cloud)
    if (args.origin is None) == (args.xy is None):
        raise InputError("give exactly one of --origin x,y,z or --xy x,y")
    if args.origin is not None:
        out = simulate_scan(cloud, _vector(args.origin, 3, "origin"), cfg)
    else:
        out = slr(cloud, _vector(args.xy, 2, "xy"), cfg, args.ground_radius)
    cloud_io.store_cloud(out, args.out, args.format)
    return {"config": cfg.to_dict()}, [Path(args.out)]


def cmd_select_positions(args) -> tuple[dict, list]:
    sel = _config(args.config, SelectionConfig) if args.config else SelectionConfig()
    try:
        profile = load_profile(args.profile) if args.profile else AzimuthProfile.zeros()
    except (OSError, ValueError) as e:
        raise InputError(str(e)) from None
    cloud = _load(args.cloud)
    cells = candidate_cells(cloud, profile, sel)
    positions = select_positions(cells, args.n, args.seed)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y"])
        w.writerows([repr(float(x)), repr(float(y))] for x, y in positions)
    configs = {"config": dataclasses.asdict(sel), "profile": profile.counts.tolist(), "n_cells": len(cells)}
    return configs, [Path(args.out)]


def _center(cloud: PointCloud, mode: str) -> np.ndarray:
    if mode == "zero":
        return np.zeros(3)
    if mode == "meta":
        if "origin" not in cloud.meta:
            raise InputError("cloud has no 'origin' metadata; use --center zero or x,y,z")
        return np.asarray(json.loads(cloud.meta["origin"]), dtype=np.float64)
    return _vector(mode, 3, "center")


def cmd_profile(args) -> tuple[dict, list]:
    profiles = []
    for path in args.clouds:
        cloud = _load(path)
        profiles.append(compute_azimuth_profile(cloud, _center(cloud, args.center)))
    store_profile(compute_minimum_profile(profiles), args.out)
    return {}, [Path(args.out)]


def _read_positions(path) -> np.ndarray:
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    if not rows or [c.strip() for c in rows[0]] != ["x", "y"]:
        raise InputError(f"{path}: expected header 'x,y'")
    try:
        pts = [(float(r[0]), float(r[1])) for r in rows[1:] if r]
    except (ValueError, IndexError):
        raise InputError(f"{path}: malformed position row") from None
    return np.array(pts, dtype=np.float64).reshape(-1, 2)


_EXT = {"bin": ".bin", "ply": ".ply", "labeled_csv": ".csv"}


def cmd_slr_batch(args) -> tuple[dict, list]:
    cfg = _config(args.config, ScannerConfig)
    positions = _read_positions(args.positions)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if len(positions) == 0:
        return {"config": cfg.to_dict()}, []
    cloud = _load(args.cloud)
    index = GroundIndex(cloud)
    fmt = args.format or "bin"

    def one(k):
        xy = positions[k]
        scan = slr(cloud, xy, cfg, args.ground_radius, ground_index=index)
        path = out_dir / f"slr_{k:05d}{_EXT[fmt]}"
        cloud_io.store_cloud(scan, path, fmt)
        return path

    workers = max(1, args.workers or os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outputs = list(pool.map(one, range(len(positions))))
    return {"config": cfg.to_dict()}, outputs


def _experiment_from(data: dict):
    try:
        scene = SceneConfig.from_dict(data["scene"])
        primary = ScannerConfig.from_dict(data["primary"])
        secondary = ScannerConfig.from_dict(data["secondary"])
        selection = SelectionConfig.from_dict(data["selection"]) if data.get("selection") else None
        profile = AzimuthProfile(np.asarray(data["min_profile"])) if data.get("min_profile") else None
        return dict(scene_cfg=scene, primary_cfg=primary, secondary_cfg=secondary,
                    n_positions=int(data["n_positions"]), seed=int(data.get("seed", 0)),
                    threshold=float(data.get("threshold", 0.10)), selection=selection, min_profile=profile)
    except KeyError as e:
        raise InputError(f"experiment config lacks {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise InputError(f"invalid experiment config: {e}") from None


def cmd_validate(args) -> tuple[dict, list]:
    data = _read_json(args.config)
    kw = _experiment_from(data)
    if args.seed is not None:
        kw["seed"] = args.seed
    result = run_experiment(**kw, workers=max(1, args.workers or os.cpu_count() or 1))
    write_records_csv(result.records, args.out)
    return {"config": data, "run": result.meta}, [Path(args.out)]


def cmd_hist(args) -> tuple[dict, list]:
    cfg = _config(args.config, ScannerConfig) if args.config else None
    classes = args.classes.split(",")
    for c in classes:
        if c not in CLASS_FILTERS:
            raise InputError(f"unknown class {c!r}; expected a subset of {','.join(CLASS_FILTERS)}")
    if args.heights and cfg is None:
        raise InputError("--heights needs --config with the simulated scanner")
    theta_res = args.theta_res or (cfg.theta_res if cfg else None)
    if theta_res is None:
        raise InputError("give --theta-res or --config to size the pulse bins")

    pooled: dict[tuple[str, float], tuple] = {}

    def add(scan, origin, height):
        if args.bin_height is not None:
            edges = pulse_sized_bins(args.bin_height, theta_res, args.max_distance, args.distance)
        else:
            edges = pulse_sized_bins(height, theta_res, args.max_distance, args.distance)
        for c in classes:
            counts = distance_counts(scan, origin, edges, c, args.below_horizon)
            key = (c, height)
            if key in pooled:
                pooled[key] = (edges, pooled[key][1] + counts)
            else:
                pooled[key] = (edges, counts)

    for path in args.clouds:
        cloud = _load(path)
        if args.heights:
            xy = _vector(args.xy, 2, "xy") if args.xy else np.zeros(2)
            for height in args.heights:
                scan = slr(cloud, xy, cfg.replace(scanner_height=height), args.ground_radius)
                add(scan, json.loads(scan.meta["origin"]), height)
        else:
            origin = _center(cloud, args.center)
            add(cloud, origin, args.bin_height or 1.65)

    hists = []
    for (c, height), (edges, counts) in pooled.items():
        if counts.sum() == 0:
            raise SLRError(f"no {c} points within the distance bins at height {height}")
        hists.append(DistanceHistogram(edges, counts, c, height))
    write_histograms_csv(hists, args.out)
    return {"config": cfg.to_dict() if cfg else None}, [Path(args.out)]


def cmd_replay(args) -> tuple[dict, list]:
    manifest = _read_json(args.manifest)
    recorded = dict(manifest["args"])
    ns = argparse.Namespace(**recorded)
    ns.func = dict(_COMMANDS)[manifest["command"]]
    tmp = tempfile.mkdtemp(prefix="slr-replay-")
    # Replay from the embedded configuration, not from the (possibly edited) original file.
    if manifest.get("configs", {}).get("config") is not None and recorded.get("config"):
        cfg_path = Path(tmp) / "config.json"
        cfg_path.write_text(json.dumps(manifest["configs"]["config"]))
        ns.config = str(cfg_path)
    out = Path(args.out)
    if manifest["command"] == "slr-batch":
        ns.out = str(out)
    else:
        out.mkdir(parents=True, exist_ok=True)
        ns.out = str(out / Path(recorded["out"]).name)
    return _run(ns)


_COMMANDS = [
    ("gen-scene", cmd_gen_scene),
    ("scan", cmd_scan),
    ("select-positions", cmd_select_positions),
    ("profile", cmd_profile),
    ("slr-batch", cmd_slr_batch),
    ("validate", cmd_validate),
    ("hist", cmd_hist),
]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slr", description="Simulated LiDAR repositioning pipelines.")
    p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = dict(choices=cloud_io.FORMATS, default=None,
               help="point-cloud format (default: from the file extension)")

    s = sub.add_parser("gen-scene", help="generate a synthetic dense scene")
    s.add_argument("--config", required=True, help="scene config JSON")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.add_argument("--format", **fmt)
    s.add_argument("--out", required=True, help="output cloud path")
    s.set_defaults(func=cmd_gen_scene)

    s = sub.add_parser("scan", help="simulate a scan from an origin or repositioned at x,y")
    s.add_argument("cloud")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--origin", help="scanner origin x,y,z")
    g.add_argument("--xy", help="horizontal position; height from local ground")
    s.add_argument("--config", required=True, help="scanner config JSON")
    s.add_argument("--ground-radius", type=float, default=3.0)
    s.add_argument("--format", **fmt)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("select-positions", help="grid-based secondary position selection")
    s.add_argument("cloud")
    s.add_argument("--config", help="selection thresholds JSON")
    s.add_argument("--profile", help="minimum azimuth profile JSON (default: all zeros)")
    s.add_argument("-n", "--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="positions CSV")
    s.set_defaults(func=cmd_select_positions)

    s = sub.add_parser("profile", help="minimum azimuth profile of reference scans")
    s.add_argument("clouds", nargs="+")
    s.add_argument("--center", default="zero",
                   help="'zero' (scanner frame), 'meta' (recorded scan origin) or x,y,z")
    s.add_argument("--out", required=True, help="profile JSON")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("slr-batch", help="one repositioned scan per position")
    s.add_argument("cloud")
    s.add_argument("--positions", required=True, help="CSV with header x,y")
    s.add_argument("--config", required=True, help="scanner config JSON")
    s.add_argument("--ground-radius", type=float, default=3.0)
    s.add_argument("--workers", type=int, default=None, help="default: all cores")
    s.add_argument("--format", **fmt)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_slr_batch)

    s = sub.add_parser("validate", help="compare SLR and true scans on a synthetic scene")
    s.add_argument("--config", required=True, help="experiment config JSON")
    s.add_argument("--seed", type=int, help="override the position seed")
    s.add_argument("--workers", type=int, default=None, help="default: all cores")
    s.add_argument("--out", required=True, help="records CSV")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("hist", help="pulse-binned distance histograms")
    s.add_argument("clouds", nargs="+")
    s.add_argument("--config", help="scanner config JSON (needed with --heights)")
    s.add_argument("--heights", type=float, nargs="*", help="re-simulate at these scanner heights")
    s.add_argument("--xy", help="scanner position for --heights (default 0,0)")
    s.add_argument("--center", default="meta",
                   help="origin without --heights: 'meta', 'zero' or x,y,z")
    s.add_argument("--classes", default="all,ground,non_ground")
    s.add_argument("--theta-res", type=float, help="bin resolution (default: scanner theta_res)")
    s.add_argument("--bin-height", type=float, help="fix pulse bins to this height for every sweep height")
    s.add_argument("--max-distance", type=float)
    s.add_argument("--distance", choices=("radial", "horizontal"), default="radial")
    s.add_argument("--below-horizon", action="store_true", help="only count points below the scanner")
    s.add_argument("--ground-radius", type=float, default=3.0)
    s.add_argument("--out", required=True, help="histogram CSV")
    s.set_defaults(func=cmd_hist)

    s = sub.add_parser("replay", help="re-run a command from its manifest")
    s.add_argument("manifest")
    s.add_argument("--out", required=True, help="new output directory")
    s.set_defaults(func=cmd_replay)
    return p


def _run(args) -> tuple[dict, list]:
    started = time.time()
    out_dir = _out_dir(args.out, args.command == "slr-batch")
    configs, outputs = args.func(args)
    _write_manifest(out_dir, args, configs, outputs, started)
    return configs, outputs


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "replay":
            args.func(args)
        else:
            _run(args)
    except InputError as e:
        _report("usage", e)
        return 1
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except (SLRError, OSError, MemoryError) as e:
        _report(type(e).__name__, e)
        return 2
    except ValueError as e:
        _report("invalid", e)
        return 1
    return 0


def _report(kind: str, err: Exception) -> None:
    print(json.dumps({"error": kind, "message": str(err)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
