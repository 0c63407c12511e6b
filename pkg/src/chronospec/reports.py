"""Report assembly and emission (CSV, JSON, and self-contained SVG).

Reports bundle run metadata, trajectories, named curves, and metric
summaries. JSON output is deterministic for fixed inputs apart from the
timestamp field; SVG plots are written directly (no external renderer).
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .oracle import Trajectory

_FORMATS = ("csv", "json", "svg")


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class Curve:
    """A named 1-D curve with axis labels, plotted/written as-is."""

    x: np.ndarray
    y: np.ndarray
    x_label: str = "x"
    y_label: str = "y"
    log_y: bool = False

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1 or x.size < 2:
            raise ReportError("curve axes must be equal-length 1-D arrays")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass
class Report:
    """Everything a single experiment run produced."""

    name: str                     # experiment label, used as file stem
    metadata: dict                # problem hash, mode, solver, n, N_tau, d, kappa, p
    metrics: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)   # name -> Trajectory
    curves: dict = field(default_factory=dict)         # name -> Curve
    resources: list = field(default_factory=list)      # rows of dicts


def problem_digest(problem) -> str:
    """Stable content hash of a problem's defining data."""
    payload = {
        "name": problem.name,
        "n_qubits": problem.n_qubits,
        "horizon": problem.horizon,
        "reference": problem.reference,
        "K": problem.K,
        "terms": [[str(p), g.describe()] for g, p in problem.hamiltonian.terms],
        "observable": [[float(z.real), float(z.imag)]
                       for z in problem.observable.targets.ravel()],
    }
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _write_curve_csv(curve: Curve, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([curve.x_label, curve.y_label])
        for xv, yv in zip(curve.x, curve.y):
            w.writerow([repr(float(xv)), repr(float(yv))])


# --- minimal SVG line plotting ---------------------------------------------

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s for s in (1, 2, 5, 10) if s * mag >= raw) * mag
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return out


def _svg_line_plot(curve: Curve, title: str) -> str:
    x, y = curve.x, curve.y
    log_y = curve.log_y and np.all(y > 0)
    yv = np.log10(y) if log_y else y
    x0, x1 = float(np.min(x)), float(np.max(x))
    y0, y1 = float(np.min(yv)), float(np.max(yv))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    iw = _W - _ML - _MR
    ih = _H - _MT - _MB

    def px(v):
        return _ML + (v - x0) / (x1 - x0) * iw

    def py(v):
        return _MT + (y1 - v) / (y1 - y0) * ih

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{iw}" height="{ih}" '
        f'fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = px(t)
        parts.append(f'<line x1="{X:.1f}" y1="{_MT + ih}" x2="{X:.1f}" '
                     f'y2="{_MT + ih + 5}" stroke="black"/>')
        parts.append(f'<text x="{X:.1f}" y="{_MT + ih + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    for t in _ticks(y0, y1):
        Y = py(t)
        label = f"1e{t:g}" if log_y else f"{t:g}"
        parts.append(f'<line x1="{_ML - 5}" y1="{Y:.1f}" x2="{_ML}" '
                     f'y2="{Y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{Y + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{label}</text>')
    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, yv))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" '
                 f'stroke-width="1.5"/>')
    parts.append(f'<text x="{_ML + iw / 2:.0f}" y="{_H - 12}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">{curve.x_label}</text>')
    parts.append(f'<text x="16" y="{_MT + ih / 2:.0f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 16 {_MT + ih / 2:.0f})">{curve.y_label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def emit_report(report: Report, out_dir, formats=("csv", "json")) -> list[str]:
    """Write the report's artifacts; returns the list of file paths."""
    formats = tuple(formats)
    unknown = set(formats) - set(_FORMATS)
    if unknown:
        raise ReportError(f"unknown formats: {sorted(unknown)}")
    out_dir = str(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ReportError(f"output directory {out_dir!r} is not writable")
    written = []
    stem = report.name

    if "csv" in formats:
        for tname, traj in sorted(report.trajectories.items()):
            path = os.path.join(out_dir, f"{stem}_{tname}.csv")
            traj.to_csv(path)
            written.append(path)
        for cname, curve in sorted(report.curves.items()):
            path = os.path.join(out_dir, f"{stem}_{cname}.csv")
            _write_curve_csv(curve, path)
            written.append(path)
        if report.resources:
            path = os.path.join(out_dir, f"{stem}_resources.csv")
            keys = list(report.resources[0])
            with open(path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=keys)
                w.writeheader()
                w.writerows(report.resources)
            written.append(path)

    if "svg" in formats:
        for cname, curve in sorted(report.curves.items()):
            path = os.path.join(out_dir, f"{stem}_{cname}.svg")
            with open(path, "w") as fh:
                fh.write(_svg_line_plot(curve, f"{stem}: {cname}"))
            written.append(path)

    if "json" in formats:
        summary = {
            "name": report.name,
            "metadata": _jsonable(report.metadata),
            "metrics": _jsonable(report.metrics),
            "resources": _jsonable(report.resources),
            "files": sorted(os.path.basename(p) for p in written),
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        path = os.path.join(out_dir, f"{stem}.json")
        with open(path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written
