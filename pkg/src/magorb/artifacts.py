"""File artifacts: loop CSV + JSON sidecar, orbit CSV, result JSON and the
built-in SVG plot.  Every numeric entering JSON is finite or the explicit
strings "inf"/"-inf"; outputs are staged in a temp directory and moved into
place only on success so no partial artifacts survive a failure.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import loopspace as ls
from .errors import ConfigError, MagorbError

FLOAT_FMT = "%.17g"


def sanitize_json(obj):
    """Recursively map numerics to finite floats or 'inf'/'-inf' strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize_json(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            raise MagorbError("refusing to serialize NaN into a result file")
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(obj, path: Path):
    text = json.dumps(sanitize_json(obj), indent=2, sort_keys=True)
    path.write_text(text + "\n")


def write_loop(timed: ls.TimedLoop, csv_path: Path, meta_path: Path):
    """Loop CSV with header i,t,x,y plus the {class, T, N} JSON sidecar."""
    pts = timed.loop.points
    N = timed.loop.N
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "t", "x", "y"])
        for i in range(N):
            w.writerow([i, FLOAT_FMT % (i / N), FLOAT_FMT % pts[i, 0],
                        FLOAT_FMT % pts[i, 1]])
    dump_json({"class": list(timed.loop.cls.label()), "T": timed.T, "N": N},
              meta_path)


def read_loop(model: geo.SurfaceModel, csv_path: Path,
              meta_path: Path) -> ls.TimedLoop:
    try:
        meta = json.loads(Path(meta_path).read_text())
        m, n = meta["class"]
        T = float(meta["T"])
        rows = []
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                rows.append((float(row["x"]), float(row["y"])))
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read loop pair {csv_path}, {meta_path}: {exc}")
    if "N" in meta and int(meta["N"]) != len(rows):
        raise ConfigError("loop sidecar N does not match the CSV row count")
    cls = geo.FreeHomotopyClass(int(m), int(n))
    loop = ls.make_loop(model, np.asarray(rows), cls)
    return ls.TimedLoop(loop, T)


def write_orbit(orbit, path: Path):
    """Orbit CSV with header t,x,y,vx,vy,E."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "vx", "vy", "E"])
        for t, q, v, e in zip(orbit.times, orbit.qs, orbit.vs, orbit.energies):
            w.writerow([FLOAT_FMT % t, FLOAT_FMT % q[0], FLOAT_FMT % q[1],
                        FLOAT_FMT % v[0], FLOAT_FMT % v[1], FLOAT_FMT % e])


_VIEWPORTS = {
    geo.FLAT_TORUS: (-8.0, -8.0, 16.0, 16.0),
    geo.EXACT_TORUS: (-8.0, -8.0, 16.0, 16.0),
    geo.HYPERBOLIC: (-8.0, 0.0, 16.0, 12.0),
}


def _svg_path(points, color, width):
    coords = " ".join(f"{x:.4f},{-y:.4f}" for x, y in points)
    return (f'<polyline fill="none" stroke="{color}" stroke-width="{width}" '
            f'points="{coords}"/>')


def write_svg(model: geo.SurfaceModel, path: Path,
              loop_pts: np.ndarray | None = None,
              orbit_pts: np.ndarray | None = None):
    """Loop trace with the integrated orbit overlay; fixed viewport per model."""
    x0, y0, w, h = _VIEWPORTS[model.kind]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0} {-y0 - h} {w} {h}" '
        f'width="640" height="{int(640 * h / w)}">',
        f'<rect x="{x0}" y="{-y0 - h}" width="{w}" height="{h}" fill="#fbfbf8"/>',
    ]
    if loop_pts is not None and len(loop_pts):
        closed = np.concatenate([loop_pts, loop_pts[:1]], axis=0)
        parts.append(_svg_path(closed, "#1f77b4", 0.04))
    if orbit_pts is not None and len(orbit_pts):
        parts.append(_svg_path(orbit_pts, "#d62728", 0.02))
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


class StagedOutput:
    """Write files into a temp sibling directory, then move each into the
    destination atomically on success."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._tmp = Path(tempfile.mkdtemp(prefix=".stage-",
                                          dir=str(self.out_dir.parent)))

    def path(self, name: str) -> Path:
        return self._tmp / name

    def commit(self):
        for entry in sorted(self._tmp.iterdir()):
            os.replace(entry, self.out_dir / entry.name)
        self._tmp.rmdir()

    def abort(self):
        for entry in self._tmp.iterdir():
            entry.unlink()
        self._tmp.rmdir()
