"""JSON documents, their schemas, and binary PGM depth maps."""

from __future__ import annotations

import json
import math
import re
from importlib import resources
from pathlib import Path

import numpy as np

from .billiard import TrajectoryRecord

SCHEMA_VERSION = "1.0"
COMMANDS = ("trace", "sweep", "iet", "helicoid", "gasket", "treecheck", "foliation")


def plain(obj):
    """Recursively convert numpy values, tuples and enums to JSON-ready values.

    Non-finite floats become ``None`` so that the output is strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if hasattr(obj, "value") and not isinstance(obj, str):
        return plain(obj.value)
    return obj


def document(command: str, config: dict, result: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": plain(config), "result": plain(result)}


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, doc: dict) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def load_schema(command: str) -> dict:
    if command not in COMMANDS:
        raise KeyError(command)
    text = resources.files("tiling_billiards").joinpath("schemas", f"{command}.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match its command's schema."""
    import jsonschema

    jsonschema.validate(doc, load_schema(doc["command"]))


def record_to_dict(rec: TrajectoryRecord, max_crossings: int = 1000) -> dict:
    """Summary of a trace and its first ``max_crossings`` crossings."""
    n = len(rec)
    k = min(n, max_crossings)
    pts = rec.points[:k]
    return {
        "status": rec.status.value,
        "steps": n,
        "tau": rec.tau,
        "tau_dispersion": rec.tau_dispersion,
        "period": int(rec.period),
        "cycle_start": int(rec.cycle_start),
        "shift": list(rec.shift),
        "drift": rec.drift,
        "growth_exponent": rec.growth_exponent,
        "singular_vertex": rec.singular_vertex,
        "start_point": rec.start_point,
        "start_direction": rec.start_direction,
        "start_tile": list(rec.start_tile),
        "crossings_truncated": k < n,
        "crossings": [
            {"tile": rec.tiles[i], "edge": int(rec.edges[i]), "point": pts[i],
             "direction": rec.directions[i], "s": float(rec.s[i])}
            for i in range(k)
        ],
    }


def write_pgm(path, depths: np.ndarray, max_depth: int) -> None:
    """Binary greymap: depth ``d`` maps to ``round(255 * d / max_depth)``,
    negative entries (outside the simplex) to 0."""
    d = np.asarray(depths)
    if d.ndim != 2:
        raise ValueError("depth map must be two-dimensional")
    scale = 255.0 / max(max_depth, 1)
    img = np.where(d < 0, 0, np.rint(np.clip(d, 0, max_depth) * scale)).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    head = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if head is None:
        raise ValueError("not a binary PGM file")
    w, h, maxval = (int(g) for g in head.groups())
    if maxval > 255:
        raise ValueError("only 8-bit PGM is supported")
    return np.frombuffer(data[head.end(): head.end() + w * h], dtype=np.uint8).reshape(h, w)
