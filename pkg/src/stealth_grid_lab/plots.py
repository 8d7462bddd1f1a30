"""Self-contained SVG line charts of sweep results."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import DomainError
from .experiment import EvalReport

__all__ = ["emit_plots", "probability_floor"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
DASHES = ("", "6,3", "2,2", "8,3,2,3")

PANEL_W, PANEL_H = 560, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 36, 46


def probability_floor(trials: int) -> float:
    """Stand-in for zero probabilities on log axes: half a Monte Carlo count."""
    return 1.0 / (2.0 * trials)


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _panel(x0, y0, title, xlabel, ylabel, series, log_y=False, note=None):
    """One chart; ``series`` is a list of ``(label, xs, ys, color, dash)``."""
    pw = PANEL_W - MARGIN_L - MARGIN_R
    ph = PANEL_H - MARGIN_T - MARGIN_B
    xs_all = [x for _, xs, _, _, _ in series for x in xs]
    ys_all = [y for _, _, ys, _, _ in series for y in ys]
    xlo, xhi = min(xs_all), max(xs_all)
    if xhi == xlo:
        xlo, xhi = xlo - 1, xhi + 1
    if log_y:
        ylo = 10 ** math.floor(math.log10(min(ys_all)))
        yhi = 10 ** math.ceil(math.log10(max(ys_all)))
        if yhi == ylo:
            yhi = ylo * 10
        yticks = [10**e for e in range(round(math.log10(ylo)), round(math.log10(yhi)) + 1)]
        fy = lambda y: (math.log10(y) - math.log10(ylo)) / (math.log10(yhi) - math.log10(ylo))
    else:
        yticks = _nice_ticks(min(ys_all), max(ys_all))
        ylo, yhi = yticks[0], yticks[-1]
        if yhi == ylo:
            ylo, yhi = ylo - 1, yhi + 1
        fy = lambda y: (y - ylo) / (yhi - ylo)
    px = lambda x: x0 + MARGIN_L + (x - xlo) / (xhi - xlo) * pw
    py = lambda y: y0 + MARGIN_T + (1 - fy(y)) * ph

    out = [
        f'<g class="panel">',
        f'<text x="{x0 + MARGIN_L + pw / 2:.1f}" y="{y0 + 20}" text-anchor="middle" '
        f'font-size="14">{escape(title)}</text>',
        f'<rect x="{x0 + MARGIN_L}" y="{y0 + MARGIN_T}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="#333"/>',
    ]
    for t in _nice_ticks(xlo, xhi):
        if xlo <= t <= xhi:
            X = px(t)
            out.append(
                f'<line x1="{X:.1f}" y1="{y0 + MARGIN_T + ph}" x2="{X:.1f}" '
                f'y2="{y0 + MARGIN_T + ph + 5}" stroke="#333"/>'
                f'<text x="{X:.1f}" y="{y0 + MARGIN_T + ph + 18}" text-anchor="middle" '
                f'font-size="11">{t:g}</text>'
            )
    for t in yticks:
        Y = py(t)
        label = f"1e{round(math.log10(t))}" if log_y else f"{t:g}"
        out.append(
            f'<line x1="{x0 + MARGIN_L}" y1="{Y:.1f}" x2="{x0 + MARGIN_L + pw}" y2="{Y:.1f}" '
            f'stroke="#ddd"/>'
            f'<text x="{x0 + MARGIN_L - 6}" y="{Y + 4:.1f}" text-anchor="end" '
            f'font-size="11">{label}</text>'
        )
    out.append(
        f'<text x="{x0 + MARGIN_L + pw / 2:.1f}" y="{y0 + PANEL_H - 8}" '
        f'text-anchor="middle" font-size="12">{escape(xlabel)}</text>'
        f'<text x="{x0 + 16}" y="{y0 + MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
        f'font-size="12" transform="rotate(-90 {x0 + 16} {y0 + MARGIN_T + ph / 2:.1f})">'
        f"{escape(ylabel)}</text>"
    )
    for i, (label, xs, ys, color, dash) in enumerate(series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        if len(xs) > 1:
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"{dash_attr}/>'
            )
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="{color}"/>')
        ly = y0 + MARGIN_T + 10 + 16 * i
        lx = x0 + MARGIN_L + pw + 10
        out.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" '
            f'stroke-width="2"{dash_attr}/>'
            f'<text x="{lx + 22}" y="{ly + 4}" font-size="11">{escape(label)}</text>'
        )
    if note:
        out.append(
            f'<text x="{x0 + MARGIN_L}" y="{y0 + PANEL_H - 24}" font-size="9" '
            f'fill="#666">{escape(note)}</text>'
        )
    out.append("</g>")
    return "\n".join(out)


def _document(panels, height):
    return "\n".join(
        [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" '
            f'viewBox="0 0 {PANEL_W} {height}" font-family="sans-serif">',
            '<rect width="100%" height="100%" fill="white"/>',
            *panels,
            "</svg>",
            "",
        ]
    )


def emit_plots(report: EvalReport, out_dir) -> list[Path]:
    """Write ``mi_detection.svg`` plus one ``attack_profile_lambda<lam>.svg`` per lambda."""
    if not report.rows:
        raise DomainError("cannot plot an empty report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    floor = probability_floor(report.config.trials)
    note = f"zero probabilities drawn at floor 1/(2 trials) = {floor:.3g}"
    clamp = lambda ps: [max(p, floor) for p in ps]

    lambdas = [lam for lam in report.config.lambdas if report.for_lambda(lam)]
    mi_series, pd_series = [], []
    for i, lam in enumerate(lambdas):
        rows = report.for_lambda(lam)
        ks = [r.k for r in rows]
        color = PALETTE[i % len(PALETTE)]
        mi_series.append((f"lambda={lam:g}", ks, [r.mi_nats for r in rows], color, ""))
        pd_series.append(
            (f"lambda={lam:g}", ks, clamp([r.p_detection for r in rows]), color, "6,3")
        )
    written = []
    path = out_dir / "mi_detection.svg"
    path.write_text(
        _document(
            [
                _panel(0, 0, "Mutual information", "compromised sensors k", "I(X;Y_A) [nats]", mi_series),
                _panel(0, PANEL_H, "Probability of detection", "compromised sensors k",
                       "P_D", pd_series, log_y=True, note=note),
            ],
            2 * PANEL_H,
        )
    )
    written.append(path)

    for lam in lambdas:
        rows = report.for_lambda(lam)
        ks = [r.k for r in rows]
        var_series = [("variance", ks, [r.variance for r in rows], PALETTE[0], "")]
        prob_series = [
            ("P_D", ks, clamp([r.p_detection for r in rows]), PALETTE[1], ""),
            ("P_FA", ks, clamp([r.p_false_alarm for r in rows]), PALETTE[2], "6,3"),
        ]
        path = out_dir / f"attack_profile_lambda{lam:g}.svg"
        path.write_text(
            _document(
                [
                    _panel(0, 0, f"Attack variance per sensor (lambda={lam:g})",
                           "compromised sensors k", "variance", var_series),
                    _panel(0, PANEL_H, f"Detection and false alarm (lambda={lam:g})",
                           "compromised sensors k", "probability", prob_series,
                           log_y=True, note=note),
                ],
                2 * PANEL_H,
            )
        )
        written.append(path)
    return written
