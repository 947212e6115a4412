"""Report files: stats.json, timelines.csv and two small SVG charts.

The SVGs are written by hand (no plotting dependency) with fixed number
formatting so reruns are byte-identical.
"""

from __future__ import annotations

import json
import statistics
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from noveltest.experiments.comparison import ComparisonReport
from noveltest.search import CoverageTimeline

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 130, 30, 50
COLOURS = {"fitness": "#d95f02", "novelty": "#1b9e77"}
_FALLBACK = ("#7570b3", "#e7298a", "#66a61e")


class ReportError(OSError):
    pass


def _colour(mode: str, i: int) -> str:
    return COLOURS.get(mode, _FALLBACK[i % len(_FALLBACK)])


def _f(v: float) -> str:
    return f"{v:.2f}"


def _header(title: str, meta: dict) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f"<title>{escape(title)}</title>",
        f"<metadata>{escape(json.dumps(meta, sort_keys=True))}</metadata>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]


def _axes(xmax: float, xlabel: str, ylabel: str, xticks: list[float]) -> list[str]:
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = WIDTH - MARGIN_R, MARGIN_T
    out = [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    for i in range(6):
        v = i / 5
        y = _sy(v)
        out.append(f'<line x1="{x0 - 4}" y1="{_f(y)}" x2="{x0}" y2="{_f(y)}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{_f(y + 4)}" text-anchor="end">{v:.1f}</text>')
    for v in xticks:
        x = _sx(v, xmax)
        out.append(f'<line x1="{_f(x)}" y1="{y0}" x2="{_f(x)}" y2="{y0 + 4}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{y0 + 18}" text-anchor="middle">{v:g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.2f})">{escape(ylabel)}</text>'
    )
    return out


def _sx(v: float, xmax: float) -> float:
    return MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * (v / xmax if xmax > 0 else 0.0)


def _sy(v: float) -> float:
    return HEIGHT - MARGIN_B - (HEIGHT - MARGIN_B - MARGIN_T) * v


def _ticks(xmax: int) -> list[float]:
    if xmax <= 0:
        return [0]
    step = max(1, int(round(xmax / 5)))
    return list(range(0, xmax + 1, step))


def coverage_series(timelines: list[CoverageTimeline]) -> list[float]:
    """Median coverage fraction per generation; finished runs hold their last value."""
    length = max((len(t.points) for t in timelines), default=0)
    out = []
    for g in range(length):
        vals = []
        for t in timelines:
            if not t.points:
                continue
            p = t.points[min(g, len(t.points) - 1)]
            vals.append(p.covered / p.total if p.total else 1.0)
        out.append(float(statistics.median(vals)))
    return out


def coverage_svg(report: ComparisonReport) -> str:
    series = {m: coverage_series([r.timeline for r in report.runs if r.mode == m]) for m in report.modes}
    xmax = max((len(s) for s in series.values()), default=1)
    meta = {"master_seed": report.master_seed, "config": report.config}
    out = _header(f"Coverage over time: {report.game}", meta)
    out += _axes(xmax, "generation", "median coverage", _ticks(xmax))
    for i, (mode, ys) in enumerate(series.items()):
        if not ys:
            continue
        pts = [f"{_f(_sx(0, xmax))},{_f(_sy(ys[0]))}"]
        for g, v in enumerate(ys):
            if g > 0:
                pts.append(f"{_f(_sx(g, xmax))},{_f(_sy(ys[g - 1]))}")
                pts.append(f"{_f(_sx(g, xmax))},{_f(_sy(v))}")
        pts.append(f"{_f(_sx(len(ys), xmax))},{_f(_sy(ys[-1]))}")
        c = _colour(mode, i)
        out.append(
            f'<polyline class="series" data-mode="{escape(mode)}" fill="none" stroke="{c}" stroke-width="2" '
            f'points="{" ".join(pts)}"/>'
        )
        ly = MARGIN_T + 20 * i + 10
        lx = WIDTH - MARGIN_R + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(mode)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def box_svg(report: ComparisonReport) -> str:
    meta = {"master_seed": report.master_seed, "config": report.config}
    out = _header(f"Final coverage: {report.game}", meta)
    n = len(report.modes)
    out += _axes(n + 1, "mode", "final coverage", [])
    for i, mode in enumerate(report.modes):
        xs = np.array(report.samples(mode), dtype=float)
        if xs.size == 0:
            continue
        lo, q1, med, q3, hi = (float(v) for v in np.percentile(xs, [0, 25, 50, 75, 100]))
        cx = _sx(i + 1, n + 1)
        half = 25
        c = _colour(mode, i)
        out.append(f'<g class="box" data-mode="{escape(mode)}">')
        out.append(f'<line x1="{_f(cx)}" y1="{_f(_sy(lo))}" x2="{_f(cx)}" y2="{_f(_sy(q1))}" stroke="black"/>')
        out.append(f'<line x1="{_f(cx)}" y1="{_f(_sy(q3))}" x2="{_f(cx)}" y2="{_f(_sy(hi))}" stroke="black"/>')
        for v in (lo, hi):
            out.append(
                f'<line x1="{_f(cx - half / 2)}" y1="{_f(_sy(v))}" x2="{_f(cx + half / 2)}" '
                f'y2="{_f(_sy(v))}" stroke="black"/>'
            )
        out.append(
            f'<rect x="{_f(cx - half)}" y="{_f(_sy(q3))}" width="{2 * half}" '
            f'height="{_f(_sy(q1) - _sy(q3))}" fill="{c}" fill-opacity="0.5" stroke="black"/>'
        )
        out.append(
            f'<line x1="{_f(cx - half)}" y1="{_f(_sy(med))}" x2="{_f(cx + half)}" y2="{_f(_sy(med))}" '
            f'stroke="black" stroke-width="2"/>'
        )
        out.append("</g>")
        out.append(f'<text x="{_f(cx)}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle">{escape(mode)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def timelines_csv(report: ComparisonReport) -> str:
    parts = [CoverageTimeline().to_csv("", "", header=True)]
    for r in report.runs:
        parts.append(r.timeline.to_csv(r.run_id, r.mode, header=False))
    return "".join(parts)


def write_report(report: ComparisonReport, out_dir: str | Path) -> list[Path]:
    """Write stats.json, timelines.csv, coverage_over_time.svg and box.svg."""
    out = Path(out_dir)
    files = {
        "stats.json": json.dumps(report.to_stats(), indent=1, sort_keys=True) + "\n",
        "timelines.csv": timelines_csv(report),
        "coverage_over_time.svg": coverage_svg(report),
        "box.svg": box_svg(report),
    }
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            path.write_text(text)
            written.append(path)
    except OSError as exc:
        raise ReportError(f"cannot write report to {exc.filename or out}: {exc.strerror or exc}") from exc
    return written


__all__ = ["ReportError", "box_svg", "coverage_series", "coverage_svg", "timelines_csv", "write_report"]
