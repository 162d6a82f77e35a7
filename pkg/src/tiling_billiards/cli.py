"""Command-line front end.

Every subcommand writes one JSON document (to ``--out`` or stdout) and,
where there is something to draw, an SVG (``--svg``) or a PGM depth map
(``--pgm``).  ``--report DIR`` writes all of them into ``DIR`` under the
subcommand's name.  Options may also come from a JSON file given with
``--config``; flags on the command line take precedence.

Exit codes: 0 on success, 1 on a computational error, 2 on a bad
configuration, 3 when ``--strict`` is set and a trajectory hit a vertex.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import formats
from .analysis import (
    SweepConfig,
    enclosed_region,
    flower_check,
    gasket_grid,
    parameter_sweep,
    permute_grid,
    survival_fraction,
    tree_check,
    triangle_depth,
)
from .billiard import Status, parallel_foliation, start_from_chord, trace
from .errors import ConfigError, DegeneratePolygon, NoSingularLeaf, NonConvex, SelfIntersecting, TilingBilliardsError
from .geom import TWO_PI, CyclicPolygon, quad_from_positions, triangle_from_angles
from .helicoid import HelicoidModel, check_symmetries
from .iet import coding_crosscheck, first_return_iet
from .tiling import Tiling

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_SINGULAR = 0, 1, 2, 3

# option name -> (default, type tag); the tag drives config-file coercion
SCENE = {
    "triangle": (None, "floats"),
    "side": (None, "float"),
    "quad": (None, "floats"),
    "tau": (0.2, "float"),
    "theta": (0.7, "float"),
    "start": (None, "floats"),
    "direction": (None, "floats"),
    "steps": (10_000, "int"),
    "seed": (0, "int"),
    "tolerance": (1e-9, "float"),
}
OPTIONS = {
    "trace": {**SCENE, "max_crossings": (1000, "int")},
    "sweep": {
        "kind": ("triangle", "str"),
        "shapes": (10, "int"),
        "starts": (10, "int"),
        "tau_min": (1e-3, "float"),
        "tau_max": (0.9, "float"),
        "steps": (100_000, "int"),
        "seed": (0, "int"),
        "min_angle": (0.05, "float"),
        "workers": (None, "int"),
    },
    "iet": {**SCENE, "crosscheck": (0, "int")},
    "helicoid": {**SCENE, "tau": (0.0, "float"), "samples": (200, "int"), "saddles": (True, "bool")},
    "gasket": {
        "grid": (256, "int"),
        "depth": (30, "int"),
        "samples": (100_000, "int"),
        "seed": (0, "int"),
        "triangle": (None, "floats"),
    },
    "treecheck": {**SCENE, "orbits": (1, "int"), "tau_max": (0.9, "float")},
    "foliation": {**SCENE, "box": (None, "floats"), "leaves": (16, "int"), "steps": (2000, "int"), "flower": (False, "bool")},
}
NOT_IN_CONFIG = {"workers"}  # affects speed only, never the output


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


PARSERS = {"floats": _floats, "float": float, "int": int, "str": str, "bool": _bool}

HELP = {
    "triangle": "triangle angles in degrees, e.g. 60,60,60",
    "side": "length of side AB (default: circumradius 1)",
    "quad": "four clockwise angular positions on the circumcircle, in degrees",
    "tau": "energy: signed distance of the chord to the circumcenter, in (-1, 1)",
    "theta": "angle parameter in radians, measured from AB in the base tile",
    "start": "explicit start point x,y (overrides tau/theta)",
    "direction": "explicit start direction dx,dy (with --start)",
    "steps": "crossing budget",
    "seed": "random seed",
    "tolerance": "state-recurrence tolerance",
    "max_crossings": "crossings written to the JSON output",
    "kind": "triangle, quad or mixed",
    "shapes": "number of random shapes",
    "starts": "random starts per shape",
    "tau_min": "smallest |tau| sampled",
    "tau_max": "largest |tau| sampled",
    "min_angle": "smallest tile angle (radians) for random shapes",
    "workers": "process count (default: TILING_BILLIARDS_THREADS, 0 = all cores)",
    "crosscheck": "compare this many symbols of the exchange with a traced trajectory",
    "samples": "number of random samples",
    "saddles": "include the saddle list",
    "grid": "depth map size in pixels",
    "depth": "step budget of the simplex algorithm",
    "orbits": "number of random orbits to test",
    "box": "region x0,y0,x1,y1 (default: around the base tile)",
    "leaves": "regular leaves sampled per direction",
    "flower": "also check the singular leaves at the base tile's vertices",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tiling-billiards", description="Tiling billiard simulations and experiments.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    p.subcommands = {}
    for name, opts in OPTIONS.items():
        sp = sub.add_parser(name, help=_COMMAND_HELP[name])
        p.subcommands[name] = sp
        for key, (_, tag) in opts.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=PARSERS[tag], default=None, help=HELP[key])
        sp.add_argument("--config", type=Path, help="JSON file with default option values")
        sp.add_argument("--out", type=Path, help="JSON output file (default: stdout)")
        sp.add_argument("--report", type=Path, help="directory for the JSON and figure outputs")
        sp.add_argument("--svg", type=Path, help="SVG rendering")
        if name == "gasket":
            sp.add_argument("--pgm", type=Path, help="binary PGM depth map")
        sp.add_argument("--strict", action="store_true", help="exit with code 3 if a trajectory hits a vertex")
    return p


_COMMAND_HELP = {
    "trace": "follow one trajectory",
    "sweep": "classify random trajectories on random shapes",
    "iet": "circle exchanges of a tile at a given energy",
    "helicoid": "period lattice, rectifying map, saddles and genus",
    "gasket": "depth map of the subtractive simplex algorithm",
    "treecheck": "graphs enclosed by periodic orbits",
    "foliation": "parallel foliation in a box",
}


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and the flags (in increasing priority)."""
    opts = OPTIONS[args.command]
    cfg = {k: d for k, (d, _) in opts.items()}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if isinstance(data, dict) and isinstance(data.get("config"), dict) and "schema_version" in data:
            data = data["config"]  # a previous output document
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        for k, v in data.items():
            if k not in opts:
                raise ConfigError(f"unknown config key {k!r} for {args.command}")
            cfg[k] = _coerce(k, v, opts[k][1])
    for k in opts:
        v = getattr(args, k)
        if v is not None:
            cfg[k] = v
    return cfg


def _coerce(key, value, tag):
    if value is None:
        return None
    try:
        if tag == "floats":
            if isinstance(value, str):
                return _floats(value)
            return [float(x) for x in value]
        if tag == "bool":
            return value if isinstance(value, bool) else _bool(str(value))
        if tag == "int" and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return PARSERS[tag](value)
    except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def build_polygon(cfg: dict) -> CyclicPolygon:
    tri, quad = cfg.get("triangle"), cfg.get("quad")
    if (tri is None) == (quad is None):
        raise ConfigError("give exactly one of --triangle or --quad")
    try:
        if tri is not None:
            if len(tri) != 3:
                raise ConfigError("--triangle needs three angles")
            if abs(sum(tri) - 180.0) > 1e-6:
                raise ConfigError(f"triangle angles sum to {sum(tri)}, not 180")
            a, b = math.radians(tri[0]), math.radians(tri[1])
            return triangle_from_angles(a, b, math.pi - a - b, cfg.get("side"))
        if len(quad) != 4:
            raise ConfigError("--quad needs four positions")
        return quad_from_positions([math.radians(x) for x in quad])
    except (DegeneratePolygon, NonConvex, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _check_scene(cfg: dict) -> None:
    if cfg.get("steps") is not None and cfg["steps"] < 1:
        raise ConfigError("--steps must be positive")
    if cfg.get("tau") is not None and not abs(cfg["tau"]) < 1.0:
        raise ConfigError("--tau must lie in (-1, 1)")
    if (cfg.get("start") is None) != (cfg.get("direction") is None):
        raise ConfigError("--start and --direction go together")
    for k in ("start", "direction"):
        if cfg.get(k) is not None and len(cfg[k]) != 2:
            raise ConfigError(f"--{k} needs two numbers")


def _start(t: Tiling, cfg: dict):
    if cfg.get("start") is not None:
        return np.array(cfg["start"]), np.array(cfg["direction"]), None
    try:
        return start_from_chord(t, cfg["tau"], cfg["theta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- commands

def cmd_trace(cfg: dict, out: dict) -> dict:
    _check_scene(cfg)
    t = Tiling(build_polygon(cfg))
    p, d, addr = _start(t, cfg)
    rec = trace(t, p, d, cfg["steps"], start_tile=addr, tol=cfg["tolerance"])
    out["record"] = rec
    out["singular"] = rec.status == Status.SINGULAR_HIT
    return formats.record_to_dict(rec, cfg["max_crossings"])


def cmd_sweep(cfg: dict, out: dict) -> dict:
    sc = SweepConfig(cfg["kind"], cfg["shapes"], cfg["starts"], cfg["tau_min"], cfg["tau_max"],
                     cfg["steps"], cfg["seed"], cfg["min_angle"])
    try:
        sc.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    res = parameter_sweep(sc, cfg["workers"])
    out["sweep"] = res
    out["singular"] = res["totals"][Status.SINGULAR_HIT.value] > 0
    return res


def cmd_iet(cfg: dict, out: dict) -> dict:
    _check_scene(cfg)
    poly = build_polygon(cfg)
    t = Tiling(poly)
    F, T = first_return_iet(poly, cfg["tau"])
    res = {
        "tau": cfg["tau"],
        "F": {**F.to_dict(), "intervals": len(F.pieces), "bijectivity_defect": F.bijectivity_defect()},
        "T": {**T.to_dict(), "intervals": len(T.pieces), "bijectivity_defect": T.bijectivity_defect()},
    }
    if cfg["crosscheck"] > 0:
        p, d, _ = _start(t, cfg)
        res["crosscheck"] = {"symbols": cfg["crosscheck"], "agrees": coding_crosscheck(t, cfg["tau"], (p, d), cfg["crosscheck"])}
    return res


def cmd_helicoid(cfg: dict, out: dict) -> dict:
    _check_scene(cfg)
    t = Tiling(build_polygon(cfg))
    model = HelicoidModel(t, cfg["tau"])
    res = model.to_dict(with_saddles=cfg["saddles"])
    res["symmetries"] = check_symmetries(model, cfg["samples"], cfg["seed"]).to_dict()
    return res


def cmd_gasket(cfg: dict, out: dict) -> dict:
    if cfg["grid"] < 2 or cfg["depth"] < 0 or cfg["samples"] < 0:
        raise ConfigError("--grid must be at least 2, --depth and --samples non-negative")
    grid = gasket_grid(cfg["grid"], cfg["depth"])
    out["grid"] = grid
    inside = grid[grid >= 0]
    hist = np.bincount(inside, minlength=cfg["depth"] + 1)
    asym = max(int(np.abs(permute_grid(grid, p) - grid).max()) for p in ((1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0)))
    res = {
        "grid": cfg["grid"],
        "depth": cfg["depth"],
        "histogram": hist,
        "full_depth_pixels": int(hist[cfg["depth"]]),
        "permutation_asymmetry": asym,
        "sha256": hashlib.sha256(grid.astype("<i8").tobytes()).hexdigest(),
    }
    if cfg["samples"] > 0:
        res["survival"] = {
            "samples": cfg["samples"],
            "simplex": survival_fraction(cfg["samples"], cfg["depth"], cfg["seed"]),
            "triangles": survival_fraction(cfg["samples"], cfg["depth"], cfg["seed"], triangles=True),
        }
    if cfg["triangle"] is not None:
        if len(cfg["triangle"]) != 3 or abs(sum(cfg["triangle"]) - 180.0) > 1e-6:
            raise ConfigError("--triangle needs three angles summing to 180")
        res["triangle_depth"] = triangle_depth([math.radians(a) for a in cfg["triangle"]], cfg["depth"])
    return res


def cmd_treecheck(cfg: dict, out: dict) -> dict:
    _check_scene(cfg)
    if cfg["orbits"] < 1:
        raise ConfigError("--orbits must be positive")
    t = Tiling(build_polygon(cfg))
    rng = np.random.default_rng(cfg["seed"])
    runs = []
    out["first_periodic"] = None
    for i in range(cfg["orbits"]):
        if i == 0:
            tau, theta = cfg["tau"], cfg["theta"]
        else:
            tau = float(rng.uniform(-cfg["tau_max"], cfg["tau_max"]))
            theta = float(rng.uniform(0.0, TWO_PI))
        entry = {"tau": tau, "theta": theta}
        try:
            p, d, addr = start_from_chord(t, tau, theta)
            rec = trace(t, p, d, cfg["steps"], start_tile=addr, tol=cfg["tolerance"])
        except TilingBilliardsError as exc:
            entry["status"] = "skipped"
            entry["reason"] = type(exc).__name__
            runs.append(entry)
            continue
        entry["status"] = rec.status.value
        entry["period"] = rec.period
        if rec.status == Status.PERIODIC:
            try:
                g = enclosed_region(rec)
            except SelfIntersecting:
                entry["tree"] = None
                entry["reason"] = "SelfIntersecting"
            else:
                entry["tree"] = tree_check(g)
                if out["first_periodic"] is None:
                    out["first_periodic"] = (rec, g)
        elif rec.status == Status.SINGULAR_HIT:
            out["singular"] = True
        runs.append(entry)
    checked = [r for r in runs if r.get("tree")]
    return {
        "orbits": runs,
        "periodic_checked": len(checked),
        "trees": sum(1 for r in checked if r["tree"]["is_tree"]),
        "all_trees": all(r["tree"]["is_tree"] for r in checked),
    }


def cmd_foliation(cfg: dict, out: dict) -> dict:
    _check_scene(cfg)
    if cfg["leaves"] < 1:
        raise ConfigError("--leaves must be positive")
    t = Tiling(build_polygon(cfg))
    if cfg["box"] is None:
        c, r = t.base.center, t.base.radius
        lo, hi = c - 2 * r, c + 2 * r
    else:
        if len(cfg["box"]) != 4:
            raise ConfigError("--box needs x0,y0,x1,y1")
        lo, hi = np.array(cfg["box"][:2]), np.array(cfg["box"][2:])
        if not (hi > lo).all():
            raise ConfigError("--box must have x1 > x0 and y1 > y0")
    fol = parallel_foliation(t, cfg["theta"], lo, hi, cfg["leaves"], cfg["steps"])
    out["foliation"] = (fol, t, lo, hi)
    res = {
        "theta": cfg["theta"],
        "box": [*lo, *hi],
        "leaves": [
            {"tau": tau, "status": rec.status.value, "crossings": len(rec), "period": rec.period}
            for tau, rec in fol.leaves
        ],
        "singular": [{"tau": tau, "vertex": v} for tau, v in fol.singular],
    }
    if cfg["flower"]:
        flowers = []
        for v in t.base.vertices:
            try:
                flowers.append(flower_check(t, v, cfg["theta"]))
            except NoSingularLeaf as exc:
                flowers.append({"vertex": v, "theta": cfg["theta"] % TWO_PI, "petals": [], "note": str(exc)})
        res["flowers"] = flowers
    return res


COMMANDS = {
    "trace": cmd_trace,
    "sweep": cmd_sweep,
    "iet": cmd_iet,
    "helicoid": cmd_helicoid,
    "gasket": cmd_gasket,
    "treecheck": cmd_treecheck,
    "foliation": cmd_foliation,
}


def _figures(command: str, extra: dict, svg: Path | None, pgm: Path | None, cfg: dict) -> None:
    from . import plotting

    if svg is not None:
        if command == "trace":
            plotting.render_trajectory(extra["record"], svg)
        elif command == "sweep":
            plotting.render_sweep(extra["sweep"], svg)
        elif command == "gasket":
            plotting.render_depth_map(extra["grid"], cfg["depth"], svg)
        elif command == "treecheck" and extra.get("first_periodic") is not None:
            rec, g = extra["first_periodic"]
            plotting.render_enclosed(rec.tiling, rec.closed_polyline(), g, svg)
        elif command == "foliation":
            fol, t, lo, hi = extra["foliation"]
            plotting.render_foliation(fol, t, lo, hi, svg)
    if pgm is not None and command == "gasket":
        formats.write_pgm(pgm, extra["grid"], cfg["depth"])


VISUAL = {"trace", "sweep", "gasket", "treecheck", "foliation"}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser.subcommands[args.command]
    extra: dict = {"singular": False}
    try:
        cfg = resolve(args)
        result = COMMANDS[args.command](cfg, extra)
    except ConfigError as exc:
        sub.print_usage(sys.stderr)
        print(f"{sub.prog}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TilingBilliardsError as exc:
        print(f"{parser.prog} {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    shown = {k: v for k, v in cfg.items() if k not in NOT_IN_CONFIG}
    doc = formats.document(args.command, shown, result)
    out, svg, pgm = args.out, args.svg, getattr(args, "pgm", None)
    if args.report is not None:
        args.report.mkdir(parents=True, exist_ok=True)
        out = out or args.report / f"{args.command}.json"
        if args.command in VISUAL:
            svg = svg or args.report / f"{args.command}.svg"
        if args.command == "gasket":
            pgm = pgm or args.report / "gasket.pgm"
    if out is None:
        sys.stdout.write(formats.dumps(doc))
    else:
        formats.write_json(out, doc)
    _figures(args.command, extra, svg, pgm, cfg)
    if args.strict and extra["singular"]:
        print(f"{parser.prog} {args.command}: trajectory hit a tiling vertex", file=sys.stderr)
        return EXIT_SINGULAR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
