"""Minimal self-contained SVG rendering for backtest and bootstrap reports."""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 860, 420
LEFT, RIGHT, TOP, BOTTOM = 64, 20, 40, 50

PLOT_W = WIDTH - LEFT - RIGHT
PLOT_H = HEIGHT - TOP - BOTTOM


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _num(value: float) -> str:
    return f"{value:.2f}"


class _Frame:
    """Affine map from data coordinates to pixel coordinates."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        if y_hi <= y_lo:
            y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
        pad = 0.06 * (y_hi - y_lo)
        self.x_lo, self.x_hi = x_lo, max(x_hi, x_lo + 1)
        self.y_lo, self.y_hi = y_lo - pad, y_hi + pad

    def x(self, v) -> float:
        return LEFT + PLOT_W * (v - self.x_lo) / (self.x_hi - self.x_lo)

    def y(self, v) -> float:
        return TOP + PLOT_H * (1.0 - (v - self.y_lo) / (self.y_hi - self.y_lo))


def _polyline(frame, values, color, width="1.5", dash=None):
    points = " ".join(
        f"{_num(frame.x(i))},{_num(frame.y(v))}" for i, v in enumerate(values)
    )
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{extra} '
        f'points="{points}"/>'
    )


def _axes(frame, x_labels):
    parts = [
        f'<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" '
        'fill="none" stroke="#999" stroke-width="1"/>'
    ]
    for tick in np.linspace(frame.y_lo, frame.y_hi, 6):
        py = _num(frame.y(tick))
        parts.append(
            f'<line x1="{LEFT - 4}" y1="{py}" x2="{LEFT}" y2="{py}" stroke="#999"/>'
        )
        parts.append(
            f'<text x="{LEFT - 8}" y="{py}" font-size="11" text-anchor="end" '
            f'dominant-baseline="middle" fill="#444">{tick:.4g}</text>'
        )
    for frac, label in x_labels:
        px = _num(LEFT + PLOT_W * frac)
        parts.append(
            f'<line x1="{px}" y1="{TOP + PLOT_H}" x2="{px}" y2="{TOP + PLOT_H + 4}" '
            'stroke="#999"/>'
        )
        parts.append(
            f'<text x="{px}" y="{TOP + PLOT_H + 18}" font-size="11" '
            f'text-anchor="middle" fill="#444">{_esc(label)}</text>'
        )
    return parts


def _document(title, body) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>'
        f'<text x="{LEFT}" y="24" font-size="15" fill="#222">{_esc(title)}</text>'
    )
    return head + "".join(body) + "</svg>\n"


def _date_labels(dates, n_labels=5):
    if len(dates) == 1:
        return [(0.5, dates[0].isoformat())]
    picks = np.linspace(0, len(dates) - 1, min(n_labels, len(dates)))
    return [
        (int(i) / (len(dates) - 1), dates[int(i)].isoformat()) for i in picks
    ]


def band_chart(path, dates, observed_pe, baseline, threshold, actions, title):
    """Observed PE against the trading band, with buy and sell marks."""
    observed_pe = np.asarray(observed_pe, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    lower = baseline * (1.0 - threshold)
    upper = baseline * (1.0 + threshold)
    stacked = np.concatenate([observed_pe, lower, upper])
    frame = _Frame(0, len(dates) - 1, float(stacked.min()), float(stacked.max()))

    body = _axes(frame, _date_labels(dates))
    body.append(_polyline(frame, upper, "#c4a35a", width="1", dash="5,4"))
    body.append(_polyline(frame, lower, "#c4a35a", width="1", dash="5,4"))
    body.append(_polyline(frame, baseline, "#2b6cb0", width="1.5"))
    body.append(_polyline(frame, observed_pe, "#222", width="1.5"))
    for t, action in enumerate(actions):
        if action == "buy":
            body.append(
                f'<circle class="buy" cx="{_num(frame.x(t))}" '
                f'cy="{_num(frame.y(observed_pe[t]))}" r="4" fill="#2f855a"/>'
            )
        elif action == "sell":
            px, py = frame.x(t), frame.y(observed_pe[t])
            body.append(
                f'<path class="sell" '
                f'd="M {_num(px - 4)} {_num(py - 4)} L {_num(px + 4)} {_num(py + 4)} '
                f'M {_num(px - 4)} {_num(py + 4)} L {_num(px + 4)} {_num(py - 4)}" '
                'stroke="#c53030" stroke-width="2"/>'
            )
    legend_y = TOP + 14
    body.append(
        f'<text x="{WIDTH - RIGHT - 6}" y="{legend_y}" font-size="11" '
        'text-anchor="end" fill="#444">observed PE (black), baseline (blue), '
        "band (dashed), buys (dots), sells (crosses)</text>"
    )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_document(title, body))


def histogram_chart(path, counts, edges, title):
    """Bar chart of binned bootstrap means; a zero line marks X = 0."""
    counts = np.asarray(counts, dtype=float)
    edges = np.asarray(edges, dtype=float)
    frame = _Frame(float(edges[0]), float(edges[-1]), 0.0, float(counts.max()))
    frame.y_lo = 0.0  # bars sit on the axis

    labels = [
        (frac, f"{edges[int(round(frac * (len(edges) - 1)))]:.3g}")
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0)
    ]
    body = _axes(frame, labels)
    for i, count in enumerate(counts):
        x0 = frame.x(edges[i])
        x1 = frame.x(edges[i + 1])
        y0 = frame.y(count)
        body.append(
            f'<rect x="{_num(x0)}" y="{_num(y0)}" width="{_num(max(x1 - x0 - 1, 0.5))}" '
            f'height="{_num(TOP + PLOT_H - y0)}" fill="#2b6cb0" fill-opacity="0.7"/>'
        )
    if edges[0] < 0.0 < edges[-1]:
        zero_x = _num(frame.x(0.0))
        body.append(
            f'<line class="zero" x1="{zero_x}" y1="{TOP}" x2="{zero_x}" '
            f'y2="{TOP + PLOT_H}" stroke="#c53030" stroke-width="1" '
            'stroke-dasharray="4,3"/>'
        )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_document(title, body))
