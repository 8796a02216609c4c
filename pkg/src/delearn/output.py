"""CSV and static-SVG emission for recorded experiment columns.

CSV: header row ``t,<col1>,...``, floats serialized with 17 significant
digits, newline-terminated rows; repeated seeded runs produce byte-identical
files.  SVG: minimal self-contained polyline plots (optionally log-scale on
the value axis), no rendering dependency.
"""

from __future__ import annotations

import math

import numpy as np


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path, columns: dict) -> None:
    """Write named, equal-length series; the first column should be ``t``."""
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("all columns must share one length")
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(format_float(v) for v in row) + "\n")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(hi):
        out.append(v)
        v += step
    return out


def write_svg(
    path,
    t: np.ndarray,
    series: dict,
    title: str = "",
    log_y: bool = True,
    width: int = 760,
    height: int = 420,
) -> None:
    """Polyline plot of the named series against t.

    With ``log_y`` the value axis is logarithmic (nonpositive samples are
    dropped from the polylines), matching the error-curve style of the
    experiment figures.
    """
    t = np.asarray(t, dtype=float)
    ml, mr, mt, mb = 64, 16, 28, 40
    iw, ih = width - ml - mr, height - mt - mb

    def transform(vals):
        if log_y:
            vals = np.where(vals > 0, vals, np.nan)
            return np.log10(vals)
        return vals.astype(float)

    all_y = np.concatenate([transform(np.asarray(v, dtype=float)) for v in series.values()])
    finite = all_y[np.isfinite(all_y)]
    if finite.size == 0:
        y_lo, y_hi = 0.0, 1.0
    else:
        y_lo, y_hi = float(finite.min()), float(finite.max())
        if y_hi - y_lo < 1e-12:
            y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    t_lo, t_hi = float(t.min()), float(t.max())

    def sx(v):
        return ml + (v - t_lo) / (t_hi - t_lo or 1.0) * iw

    def sy(v):
        return mt + (y_hi - v) / (y_hi - y_lo) * ih

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#17becf", "#7f7f7f"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml}" y="16" font-size="13">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{iw}" height="{ih}" fill="none" stroke="#444"/>',
    ]
    for tx in _ticks(t_lo, t_hi):
        x = sx(tx)
        parts.append(f'<line x1="{x:.1f}" y1="{mt + ih}" x2="{x:.1f}" y2="{mt + ih + 4}" stroke="#444"/>')
        parts.append(f'<text x="{x:.1f}" y="{mt + ih + 16}" text-anchor="middle">{tx:g}</text>')
    for ty in _ticks(y_lo, y_hi):
        yy = sy(ty)
        label = f"1e{ty:g}" if log_y else f"{ty:g}"
        parts.append(f'<line x1="{ml - 4}" y1="{yy:.1f}" x2="{ml}" y2="{yy:.1f}" stroke="#444"/>')
        parts.append(f'<text x="{ml - 7}" y="{yy + 3:.1f}" text-anchor="end">{label}</text>')
    for idx, (name, vals) in enumerate(series.items()):
        yv = transform(np.asarray(vals, dtype=float))
        pts = [
            f"{sx(tv):.2f},{sy(vv):.2f}"
            for tv, vv in zip(t, yv)
            if np.isfinite(vv)
        ]
        color = palette[idx % len(palette)]
        if pts:
            parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" stroke-width="1.4"/>'
            )
        ly = mt + 14 + 14 * idx
        parts.append(f'<line x1="{ml + iw - 130}" y1="{ly - 4}" x2="{ml + iw - 110}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{ml + iw - 104}" y="{ly}">{name}</text>')
    parts.append(f'<text x="{ml + iw / 2:.0f}" y="{height - 8}" text-anchor="middle">t [s]</text>')
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
