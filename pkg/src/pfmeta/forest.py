"""Standalone SVG forest plots drawn from a report document.

Every number comes from the report; the emitter only maps values to pixels.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import DomainError

WIDTH = 760
LABEL_W = 140
PLOT_W = 480
ROW_H = 26
TOP = 40
MAX_MARKER = 14.0
MIN_MARKER = 3.0


def _rows_for(report, analysis):
    """Return (title, study rows, summary) with rows as (label, point, lo, hi, precision)."""
    if analysis in ("fixed", "random"):
        pooled = report.get(analysis)
        if not pooled:
            raise DomainError(f"report has no {analysis} analysis")
        rows = [
            (s["label"], s["pf"], s["ci_lower"], s["ci_upper"], 1.0 / s["variance"])
            for s in report["dataset"]["studies"]
        ]
        title = "Fixed-effect meta-analysis" if analysis == "fixed" else "Random-effects meta-analysis"
        return title, rows, (pooled["spf"], pooled["ci_lower"], pooled["ci_upper"])
    if analysis.startswith("bayes:"):
        name = analysis.split(":", 1)[1]
        for run in report.get("bayes", []):
            if run["prior_name"] == name:
                by_name = {r["parameter"]: r for r in run["rows"]}
                rows = []
                for s in report["dataset"]["studies"]:
                    r = by_name[s["label"]]
                    rows.append((s["label"], r["mean"], r["q025"], r["q975"], 1.0 / r["sd"] ** 2))
                spf = by_name["SPF"]
                return f"Bayesian hierarchical model ({name} prior)", rows, (spf["mean"], spf["q025"], spf["q975"])
        raise DomainError(f"report has no Bayesian run with prior {name!r}")
    raise DomainError(f"unknown analysis {analysis!r}")


def default_analysis(report):
    for key in ("fixed", "random"):
        if report.get(key):
            return key
    if report.get("bayes"):
        return "bayes:" + report["bayes"][0]["prior_name"]
    raise DomainError("report contains no pooled analysis to plot")


def _ticks(lo, hi, step=0.2):
    start = math.ceil(lo / step - 1e-9)
    stop = math.floor(hi / step + 1e-9)
    return [round(i * step, 10) for i in range(start, stop + 1)]


def forest_svg(report: dict, analysis=None) -> str:
    analysis = analysis or default_analysis(report)
    title, rows, (spf, spf_lo, spf_hi) = _rows_for(report, analysis)

    lo = min([r[2] for r in rows] + [spf_lo, 0.0])
    hi = max([r[3] for r in rows] + [spf_hi, 0.0])
    lo = math.floor(lo * 5 - 0.25) / 5
    hi = math.ceil(hi * 5 + 0.25) / 5

    def px(value):
        return LABEL_W + (value - lo) / (hi - lo) * PLOT_W

    n = len(rows)
    axis_y = TOP + (n + 1) * ROW_H + 10
    height = axis_y + 50
    max_prec = max(r[4] for r in rows)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{px(0.0):.2f}" y1="{TOP - 10}" x2="{px(0.0):.2f}" y2="{axis_y}" '
        'stroke="red" stroke-width="1.5" stroke-dasharray="6,4"/>',
    ]
    for i, (label, point, c_lo, c_hi, prec) in enumerate(rows):
        y = TOP + i * ROW_H + ROW_H / 2
        side = max(MIN_MARKER, MAX_MARKER * math.sqrt(prec / max_prec))
        out.append(f'<g class="study">')
        out.append(f'<text x="{LABEL_W - 10}" y="{y + 4:.1f}" text-anchor="end">{escape(label)}</text>')
        out.append(
            f'<line x1="{px(c_lo):.2f}" y1="{y:.1f}" x2="{px(c_hi):.2f}" y2="{y:.1f}" stroke="black" stroke-width="1.5"/>'
        )
        out.append(
            f'<rect x="{px(point) - side / 2:.2f}" y="{y - side / 2:.2f}" width="{side:.2f}" '
            f'height="{side:.2f}" fill="red" stroke="red"/>'
        )
        out.append(
            f'<text x="{LABEL_W + PLOT_W + 10}" y="{y + 4:.1f}">{point:.2f} [{c_lo:.2f}, {c_hi:.2f}]</text>'
        )
        out.append("</g>")
    y = TOP + n * ROW_H + ROW_H / 2
    half = ROW_H * 0.35
    points = (
        f"{px(spf_lo):.2f},{y:.1f} {px(spf):.2f},{y - half:.1f} "
        f"{px(spf_hi):.2f},{y:.1f} {px(spf):.2f},{y + half:.1f}"
    )
    out.append('<g class="summary">')
    out.append(f'<text x="{LABEL_W - 10}" y="{y + 4:.1f}" text-anchor="end" font-weight="bold">Summary</text>')
    out.append(f'<polygon points="{points}" fill="white" stroke="red" stroke-width="1.5"/>')
    out.append(
        f'<text x="{LABEL_W + PLOT_W + 10}" y="{y + 4:.1f}" font-weight="bold">'
        f'{spf:.2f} [{spf_lo:.2f}, {spf_hi:.2f}]</text>'
    )
    out.append("</g>")
    out.append(
        f'<line x1="{LABEL_W}" y1="{axis_y}" x2="{LABEL_W + PLOT_W}" y2="{axis_y}" stroke="black"/>'
    )
    for t in _ticks(lo, hi):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{axis_y}" x2="{x:.2f}" y2="{axis_y + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{axis_y + 18}" text-anchor="middle">{t:.1f}</text>')
    out.append(
        f'<text x="{LABEL_W + PLOT_W / 2}" y="{axis_y + 38}" text-anchor="middle">'
        "Effect (prevented fraction)</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_forest_svg(report: dict, path, analysis=None):
    Path(path).write_text(forest_svg(report, analysis), encoding="utf-8")
    return path
