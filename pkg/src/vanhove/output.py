"""File emission: RFC-4180 CSV, minimal SVG line charts, run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from . import __version__

TRACE_COLUMNS = ("t", "T", "p1_mean", "p1_stderr", "p2_mean", "p2_stderr", "norm_mean")
SWEEP_COLUMNS = ("N", "lambda", "S", "rate", "rate_stderr", "equilibrium_p1", "r_squared")


def fmt(value: Any) -> str:
    """Shortest round-trip text for floats; plain text otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
    return path


def line_chart_svg(
    path: Path,
    series: List[Tuple[str, Sequence[float], Sequence[float], str, bool]],
    xlabel: str,
    ylabel: str,
    title: str,
    width: int = 640,
    height: int = 420,
) -> Path:
    """Write a plain SVG chart. Each series is ``(label, x, y, colour, dashed)``."""
    left, right, top, bottom = 60, 20, 30, 50
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), max(1.0, float(ys.max()))
    if x1 == x0:
        x1 = x0 + 1.0

    def px(x):
        return left + (x - x0) / (x1 - x0) * (width - left - right)

    def py(y):
        return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
    ]
    for i in range(6):
        xv = x0 + (x1 - x0) * i / 5
        yv = y0 + (y1 - y0) * i / 5
        parts.append(
            f'<text x="{px(xv):.1f}" y="{height - bottom + 16}" text-anchor="middle" '
            f'font-size="11">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{left - 6}" y="{py(yv) + 4:.1f}" text-anchor="end" font-size="11">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">{xlabel}</text>'
    )
    parts.append(
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.1f})">{ylabel}</text>'
    )
    for idx, (label, x, y, colour, dashed) in enumerate(series):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{pts}"/>')
        ly = top + 14 + 16 * idx
        parts.append(
            f'<line x1="{width - 170}" y1="{ly}" x2="{width - 145}" y2="{ly}" stroke="{colour}"{dash}/>'
        )
        parts.append(f'<text x="{width - 140}" y="{ly + 4}" font-size="11">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def write_manifest(
    out_dir: Path,
    command: str,
    config: Dict[str, Any],
    started: str,
    outputs: Sequence[Path],
) -> Path:
    """``manifest.json``: resolved config, seed, version, timestamps, output checksums."""
    snapshot = json.dumps(config, sort_keys=True)
    digest = hashlib.sha256(f"{command}\n{snapshot}".encode()).hexdigest()[:10]
    stamp = started.replace("-", "").replace(":", "").split(".")[0]
    payload = {
        "run_id": f"{stamp}-{digest}",
        "command": command,
        "config_snapshot": config,
        "master_seed": config["ensemble"]["master_seed"],
        "artifact_version": __version__,
        "started": started,
        "finished": utc_now(),
        "outputs": [{"file": Path(p).name, "sha256": sha256(p)} for p in outputs],
    }
    return write_json(Path(out_dir) / "manifest.json", payload)
