"""CSV, SVG and manifest writers shared by the CLI commands."""
from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from pathlib import Path

from . import __version__


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return str(v)


def write_name_value_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("name,value\n")
        for name, value in rows:
            fh.write(f"{name},{format_value(value)}\n")


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_svg_polyline(path, series: dict, title: str = "", xlabel: str = "",
                       ylabel: str = "") -> None:
    """Line chart in a fixed ``0 0 800 600`` viewBox, one polyline per series."""
    W, H, pad = 800, 600, 60
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    xs = [x for xv, _ in series.values() for x in xv]
    ys = [y for _, yv in series.values() for y in yv if math.isfinite(y)]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x):
        return pad + (x - x_lo) / (x_hi - x_lo) * (W - 2 * pad)

    def py(y):
        return H - pad - (y - y_lo) / (y_hi - y_lo) * (H - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
        f'<text x="{W / 2}" y="30" text-anchor="middle" font-size="18">{title}</text>',
        f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-size="14">{xlabel}</text>',
        f'<text x="15" y="{H / 2}" font-size="14" transform="rotate(-90 15 {H / 2})">{ylabel}</text>',
        f'<text x="{pad - 5}" y="{H - pad}" text-anchor="end" font-size="11">{y_lo:.3g}</text>',
        f'<text x="{pad - 5}" y="{pad + 4}" text-anchor="end" font-size="11">{y_hi:.3g}</text>',
    ]
    for i, (name, (xv, yv)) in enumerate(series.items()):
        color = colors[i % len(colors)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xv, yv) if math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{W - pad - 150}" y="{pad + 20 * (i + 1)}" fill="{color}" '
                   f'font-size="13">{name}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


class RunManifest:
    """Collects emitted files, stage timings and a summary; ``write`` goes last."""

    def __init__(self, command: str, config: dict, seed, out_dir):
        self.command = command
        self.config = config
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.files: list[str] = []
        self.summary: dict = {}
        self.timings: dict = {}
        self.status = "ok"
        self.exit_code = 0

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out_dir / name

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - t0

    def write(self) -> Path:
        doc = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "files": sorted(self.files) + ["manifest.json"],
            "summary": {k: _jsonable(v) for k, v in self.summary.items()},
            "timings": self.timings,
            "status": self.status,
            "exit_code": self.exit_code,
            "version": __version__,
        }
        target = self.out_dir / "manifest.json"
        target.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return target


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v
