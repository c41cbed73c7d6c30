"""Report serialisation: canonical JSON, CSV dumps and plain SVG plots.

Canonical JSON sorts keys, rounds every float to 12 significant digits and
writes non-finite floats as strings, so two runs with the same seed produce
the same bytes.
"""

from __future__ import annotations

import json
import math
from html import escape

import numpy as np

from .errors import Mismatch

SIG_DIGITS = 12


def canonical(obj):
    """Plain-Python copy of ``obj`` with floats rounded to ``SIG_DIGITS`` significant digits."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{SIG_DIGITS}g}")
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    return json.dumps(canonical(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    text = dumps(obj)
    with open(path, "w") as fh:
        fh.write(text)
    return text


def first_difference(a, b, path="$"):
    """JSON-path of the first place two parsed reports differ, or ``None``."""
    if type(a) is not type(b):
        return path
    if isinstance(a, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                return f"{path}.{k}"
            sub = first_difference(a[k], b[k], f"{path}.{k}")
            if sub:
                return sub
        return None
    if isinstance(a, list):
        for i, (x, y) in enumerate(zip(a, b)):
            sub = first_difference(x, y, f"{path}[{i}]")
            if sub:
                return sub
        return f"{path}[{min(len(a), len(b))}]" if len(a) != len(b) else None
    return None if a == b else path


def compare_reports(old_text, new_text):
    """Raise :class:`Mismatch` naming the first differing path unless the texts are identical."""
    if old_text == new_text:
        return True
    where = first_difference(json.loads(old_text), json.loads(new_text)) or "$"
    raise Mismatch(where, f"reports differ at {where}")


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.{SIG_DIGITS}g}"


def pair_histogram(pairs):
    """Collapse integer ``(delta_P, delta_x)`` pairs to rows ``(delta_P, delta_x, count)``."""
    P = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(P) == 0:
        return np.zeros((0, 3), dtype=np.int64)
    uniq, counts = np.unique(P, axis=0, return_counts=True)
    return np.column_stack([uniq, counts])


# ---------------------------------------------------------------------------
# SVG

W, H, PAD = 480, 360, 48


class _Axes:
    def __init__(self, xlo, xhi, ylo, yhi):
        self.xlo, self.xhi = xlo, xhi if xhi > xlo else xlo + 1.0
        self.ylo, self.yhi = ylo, yhi if yhi > ylo else ylo + 1.0

    def x(self, v):
        return PAD + (v - self.xlo) / (self.xhi - self.xlo) * (W - 2 * PAD)

    def y(self, v):
        return H - PAD - (v - self.ylo) / (self.yhi - self.ylo) * (H - 2 * PAD)


def _frame(ax, title, xlabel, ylabel):
    g = [f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" fill="none" stroke="#444"/>',
         f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>',
         f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
         f'<text x="14" y="{H / 2}" text-anchor="middle" font-size="12" '
         f'transform="rotate(-90 14 {H / 2})">{escape(ylabel)}</text>']
    for v in (ax.xlo, ax.xhi):
        g.append(f'<text x="{ax.x(v):.1f}" y="{H - PAD + 14}" text-anchor="middle" font-size="10">{v:.3g}</text>')
    for v in (ax.ylo, ax.yhi):
        g.append(f'<text x="{PAD - 4}" y="{ax.y(v) + 3:.1f}" text-anchor="end" font-size="10">{v:.3g}</text>')
    return g


def _svg(body):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">\n'
            + "\n".join(body) + "\n</svg>\n")


def svg_scatter(points, title="", xlabel="x", ylabel="y", highlight=None):
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    lo = P.min(axis=0) if len(P) else np.zeros(2)
    hi = P.max(axis=0) if len(P) else np.ones(2)
    ax = _Axes(lo[0], hi[0], lo[1], hi[1])
    body = _frame(ax, title, xlabel, ylabel)
    body += [f'<circle cx="{ax.x(x):.2f}" cy="{ax.y(y):.2f}" r="2" fill="#1f77b4"/>' for x, y in P]
    if highlight is not None:
        x, y = highlight
        body.append(f'<circle cx="{ax.x(x):.2f}" cy="{ax.y(y):.2f}" r="4" fill="none" stroke="#d62728"/>')
    return _svg(body)


def svg_histogram(values, bins=20, title="", xlabel="value"):
    v = np.asarray(values, dtype=float).ravel()
    lo, hi = (float(v.min()), float(v.max())) if len(v) else (0.0, 1.0)
    if hi - lo <= max(abs(lo), abs(hi), 1.0) * 1e-9:
        # numerically constant data: give it a visible width
        lo, hi = lo - max(abs(lo), 1.0) * 1e-6, hi + max(abs(hi), 1.0) * 1e-6
    counts, edges = np.histogram(v, bins=bins, range=(lo, hi))
    ax = _Axes(lo, hi, 0.0, float(max(counts.max(initial=0), 1)))
    body = _frame(ax, title, xlabel, "count")
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        body.append(f'<rect x="{ax.x(a):.2f}" y="{ax.y(c):.2f}" width="{max(ax.x(b) - ax.x(a) - 1, 0.5):.2f}" '
                    f'height="{ax.y(0) - ax.y(c):.2f}" fill="#ff7f0e"/>')
    return _svg(body)


def svg_band(pairs, a, c, title="", xlabel="delta_P", ylabel="delta_x"):
    """Scatter of ``(delta_P, delta_x)`` with the band ``delta_P/a - c <= delta_x <= a delta_P + c``."""
    P = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if len(P) > 5000:
        P = np.unique(P, axis=0)
    xmax = float(P[:, 0].max()) if len(P) else 1.0
    ymax = max(float(P[:, 1].max()) if len(P) else 1.0, a * xmax + c)
    ax = _Axes(0.0, xmax, 0.0, ymax)
    body = _frame(ax, title, xlabel, ylabel)
    xs = np.linspace(0.0, xmax, 50)
    up = " ".join(f"{ax.x(x):.2f},{ax.y(a * x + c):.2f}" for x in xs)
    dn = " ".join(f"{ax.x(x):.2f},{ax.y(max(x / a - c, 0.0)):.2f}" for x in xs[::-1])
    body.append(f'<polygon points="{up} {dn}" fill="#2ca02c" fill-opacity="0.15" stroke="#2ca02c"/>')
    body += [f'<circle cx="{ax.x(x):.2f}" cy="{ax.y(y):.2f}" r="1.5" fill="#1f77b4"/>' for x, y in P]
    return _svg(body)


def write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)
