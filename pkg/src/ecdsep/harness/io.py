"""CSV/JSON/SVG writers. Floats are written with ``repr`` so files round-trip
exactly and repeated runs produce identical bytes."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ecdsep.optimizer import TrajectoryLog

TRAJECTORY_HEADER = ("step", "f", "energy", "pi_norm", "theta_norm")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def write_trajectory_csv(path, log: TrajectoryLog) -> None:
    write_rows(path, TRAJECTORY_HEADER, ((int(r[0]), *map(float, r[1:])) for r in log.data))


def read_trajectory_csv(path) -> TrajectoryLog:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected trajectory header {header}")
        data = [[float(v) for v in row] for row in reader]
    return TrajectoryLog(np.array(data, dtype=np.float64).reshape(-1, 5))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def write_loss_svg(path, steps, values, width: int = 640, height: int = 360) -> None:
    """Minimal log10(F) vs step polyline."""
    steps = np.asarray(steps, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    ok = np.isfinite(vals) & (vals > 0)
    pad = 40
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if ok.sum() >= 2:
        x, y = steps[ok], np.log10(vals[ok])
        x0, x1 = x.min(), x.max() if x.max() > x.min() else x.min() + 1
        y0, y1 = y.min(), y.max() if y.max() > y.min() else y.min() + 1
        px = pad + (x - x0) / (x1 - x0) * (width - 2 * pad)
        py = height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        lines.append(f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>')
        lines.append(f'<text x="{pad}" y="{pad - 10}" font-size="12">log10 F: {y0:.3g} .. {y1:.3g}</text>')
        lines.append(f'<text x="{pad}" y="{height - 10}" font-size="12">step {x0:.0f} .. {x1:.0f}</text>')
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n")
