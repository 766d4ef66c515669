"""Minimal self-contained SVG line plots plus gnuplot-readable .dat files."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .montecarlo import atomic_write

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#e377c2", "#7f7f7f", "#17becf", "#bcbd22")
W, H = 640, 420
PAD_L, PAD_R, PAD_T, PAD_B = 70, 150, 40, 50


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


def dat_text(series: Sequence[Series], xlabel: str, ylabel: str) -> str:
    """One gnuplot index block per series, separated by two blank lines."""
    out = [f"# x: {xlabel}", f"# y: {ylabel}"]
    for s in series:
        out.append(f"# series: {s.label}")
        out.extend(f"{x!r} {y!r}" for x, y in zip(s.x, s.y))
        out.extend(["", ""])
    return "\n".join(out) + "\n"


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (step * m) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step) + 1)]


def svg_text(series: Sequence[Series], title: str, xlabel: str, ylabel: str,
             logy: bool = False) -> str:
    pts = []
    for s in series:
        for x, y in zip(s.x, s.y):
            if y is None or not math.isfinite(float(y)) or (logy and y <= 0):
                continue
            pts.append((float(x), math.log10(y) if logy else float(y)))
    x_lo = min((p[0] for p in pts), default=0.0)
    x_hi = max((p[0] for p in pts), default=1.0)
    y_lo = min((p[1] for p in pts), default=0.0)
    y_hi = max((p[1] for p in pts), default=1.0)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1, y_hi + 1
    pw, ph = W - PAD_L - PAD_R, H - PAD_T - PAD_B

    def sx(x):
        return PAD_L + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return PAD_T + ph - (y - y_lo) / (y_hi - y_lo) * ph

    el = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
          f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
          f'<rect width="{W}" height="{H}" fill="white"/>',
          f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
          f'<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x_lo, x_hi):
        el.append(f'<line x1="{sx(t):.1f}" y1="{PAD_T + ph}" x2="{sx(t):.1f}" '
                  f'y2="{PAD_T + ph + 5}" stroke="black"/>')
        el.append(f'<text x="{sx(t):.1f}" y="{PAD_T + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        lab = f"1e{t:g}" if logy else f"{t:g}"
        el.append(f'<line x1="{PAD_L - 5}" y1="{sy(t):.1f}" x2="{PAD_L}" y2="{sy(t):.1f}" stroke="black"/>')
        el.append(f'<text x="{PAD_L - 8}" y="{sy(t) + 4:.1f}" text-anchor="end">{lab}</text>')
    el.append(f'<text x="{PAD_L + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    el.append(f'<text x="16" y="{PAD_T + ph / 2:.1f}" text-anchor="middle" '
              f'transform="rotate(-90 16 {PAD_T + ph / 2:.1f})">{escape(ylabel)}</text>')
    for k, s in enumerate(series):
        c = _COLOURS[k % len(_COLOURS)]
        xy = [(float(x), math.log10(y) if logy else float(y)) for x, y in zip(s.x, s.y)
              if y is not None and math.isfinite(float(y)) and not (logy and y <= 0)]
        if len(xy) > 1:
            path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in xy)
            el.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        for x, y in xy:
            el.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.5" fill="{c}"/>')
        ly = PAD_T + 14 + 16 * k
        el.append(f'<line x1="{W - PAD_R + 10}" y1="{ly - 4}" x2="{W - PAD_R + 28}" '
                  f'y2="{ly - 4}" stroke="{c}" stroke-width="2"/>')
        el.append(f'<text x="{W - PAD_R + 32}" y="{ly}">{escape(s.label)}</text>')
    el.append("</svg>")
    return "\n".join(el) + "\n"


def write_plot(stem: Path, series: Sequence[Series], title: str, xlabel: str,
               ylabel: str, logy: bool = False) -> list:
    """Write ``stem.svg`` and ``stem.dat``; returns the two paths."""
    stem = Path(stem)
    svg, dat = stem.with_suffix(".svg"), stem.with_suffix(".dat")
    atomic_write(svg, svg_text(series, title, xlabel, ylabel, logy))
    atomic_write(dat, dat_text(series, xlabel, ylabel))
    return [svg, dat]


def summary_plots(summary: dict, out_dir: Path) -> list:
    """Tail curves, speed and overshoot curves from a run's summary.json."""
    out_dir = Path(out_dir)
    written = []
    if "tails" in summary:
        by_t = {}
        for row in summary["tails"]:
            by_t.setdefault(row["t"], []).append((row["L"], row["p"]))
        series = [Series(f"t={t:g}", [a for a, _ in v], [b for _, b in v])
                  for t, v in sorted(by_t.items())]
        written += write_plot(out_dir / "tails", series, "P(|rho_t| > L)", "L",
                              "probability", logy=True)
    if summary.get("speed"):
        rows = [r for r in summary["speed"] if r["alpha"] is not None]
        series = [Series("alpha", [r["T"] for r in rows], [r["alpha"] for r in rows]),
                  Series("ci low", [r["T"] for r in rows], [r["ci_lo"] for r in rows]),
                  Series("ci high", [r["T"] for r in rows], [r["ci_hi"] for r in rows])]
        written += write_plot(out_dir / "speed", series, "r_T / T", "T", "speed")
    if "overshoot" in summary:
        by_t = {}
        for row in summary["overshoot"]:
            by_t.setdefault(row["T"], []).append((row["L"], row["p"]))
        series = [Series(f"T={t:g}", [a for a, _ in v], [b for _, b in v])
                  for t, v in sorted(by_t.items())]
        written += write_plot(out_dir / "overshoot", series, "P(q_T > r_T + L)", "L",
                              "probability", logy=True)
    if "slow" in summary:
        series = [Series(f"gamma={g}", [r["T"] for r in rows], [r["p"] for r in rows])
                  for g, rows in summary["slow"].items()]
        written += write_plot(out_dir / "slow_escape", series,
                              "P(slow up to T, not up to 2T)", "T", "probability", logy=True)
    return written
