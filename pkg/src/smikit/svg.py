"""Minimal deterministic SVG scatter plots.

Hand-assembled markup, no plotting dependency: the same inputs must
produce byte-identical files.  One chart per model and metric, showing
bin points and the fitted line.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

_WIDTH = 640
_HEIGHT = 440
_MARGIN_L = 64
_MARGIN_R = 20
_MARGIN_T = 36
_MARGIN_B = 48


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def render_scatter(
    points: Sequence[tuple[float, float]],
    slope: float,
    intercept: float,
    title: str,
    xlabel: str,
    ylabel: str = "accuracy",
) -> str:
    """Render bin points plus the fitted line as an SVG document."""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_all = ys + [slope * x + intercept for x in (x_lo, x_hi)]
    y_lo, y_hi = min(y_all), max(y_all)
    x_pad = (x_hi - x_lo) * 0.05 or 0.5
    y_pad = (y_hi - y_lo) * 0.05 or 0.05
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{_escape(title)}</text>',
    ]
    axis = f'{_MARGIN_L} {_MARGIN_T + plot_h}'
    parts.append(
        f'<path d="M {_MARGIN_L} {_MARGIN_T} L {axis} L {_MARGIN_L + plot_w} {_MARGIN_T + plot_h}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{px(tx):.1f}" y1="{_MARGIN_T + plot_h}" x2="{px(tx):.1f}" '
            f'y2="{_MARGIN_T + plot_h + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(tx):.1f}" y="{_MARGIN_T + plot_h + 18}" text-anchor="middle" '
            f'font-size="11">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{_MARGIN_L - 4}" y1="{py(ty):.1f}" x2="{_MARGIN_L}" y2="{py(ty):.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{py(ty) + 4:.1f}" text-anchor="end" font-size="11">{_fmt(ty)}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 10}" text-anchor="middle" '
        f'font-size="12">{_escape(xlabel)}</text>'
    )
    parts.append(
        f'<text x="16" y="{_MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {_MARGIN_T + plot_h / 2:.1f})">{_escape(ylabel)}</text>'
    )
    parts.append(
        f'<line x1="{px(x_lo):.1f}" y1="{py(slope * x_lo + intercept):.1f}" '
        f'x2="{px(x_hi):.1f}" y2="{py(slope * x_hi + intercept):.1f}" '
        f'stroke="#c23" stroke-width="1.5"/>'
    )
    for x, y in points:
        parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3.5" fill="#247" fill-opacity="0.85"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_report_svgs(report: dict, out_dir: str | Path) -> list[Path]:
    """One SVG per model and metric from a report's bin tables."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for model in sorted(report["models"]):
        block = report["models"][model]["metrics"]
        for metric, data in block.items():
            points = [(b["x"], b["mean_accuracy"]) for b in data["bins"]]
            if not points:
                continue
            fit = data["fit"]
            svg = render_scatter(
                points, fit["slope"], fit["intercept"],
                title=f"{model}: accuracy vs {metric}",
                xlabel=metric,
            )
            safe_model = "".join(c if c.isalnum() or c in "-_." else "-" for c in model)
            path = out_dir / f"{safe_model}_{metric}.svg"
            path.write_text(svg, encoding="utf-8")
            written.append(path)
    return sorted(written)
