"""Static SVG 1.1 renderings of already-computed tables (parity, importance, beeswarm, RMSE spread)."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

W, H, PAD = 480, 360, 48


def _f(v):
    return f"{v:.3f}"


def _doc(body, width=W, height=H, title=""):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n')
    t = f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>\n'
    return head + '<rect width="100%" height="100%" fill="white"/>\n' + t + "".join(body) + "</svg>\n"


def _line(x1, y1, x2, y2, color="black", dashed=False, width=1.0):
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return (f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{color}" '
            f'stroke-width="{width}"{dash}/>\n')


def parity_svg(actual, predicted, err_std, title="Parity", factors=(1.5, 2.0)):
    """Predicted vs actual with the identity line and dashed +/- k*sigma_E band pairs."""
    a = np.asarray(actual, float)
    p = np.asarray(predicted, float)
    lo = float(min(a.min(), p.min()))
    hi = float(max(a.max(), p.max()))
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo

    def sx(v):
        return PAD + (v - lo) / span * (W - 2 * PAD)

    def sy(v):
        return H - PAD - (v - lo) / span * (H - 2 * PAD)

    body = [_line(PAD, H - PAD, W - PAD, H - PAD), _line(PAD, PAD, PAD, H - PAD), _line(sx(lo), sy(lo), sx(hi), sy(hi))]
    colors = {factors[0]: "#d62728", factors[-1]: "#1f77b4"}
    for k in factors:
        off = k * err_std
        for sgn in (1, -1):
            body.append(f"<!-- band {'+' if sgn > 0 else '-'}{k:g} sigma -->\n")
            body.append(_line(sx(lo), sy(lo + sgn * off), sx(hi), sy(hi + sgn * off), colors.get(k, "gray"), True))
    for x, y in zip(a, p):
        body.append(f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="2" fill="black" fill-opacity="0.5"/>\n')
    body.append(f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="11">actual</text>\n')
    body.append(f'<text x="12" y="{H / 2}" font-size="11" transform="rotate(-90 12 {H / 2})">predicted</text>\n')
    return _doc(body, title=title)


def importance_svg(rows, title="Feature importance"):
    """Horizontal bars for ``[(name, value)]`` in the given order."""
    rows = list(rows)
    height = max(H, 30 + 18 * len(rows) + PAD)
    vmax = max([abs(v) for _, v in rows] + [1e-300])
    left = 170
    body = []
    for i, (name, v) in enumerate(rows):
        y = 36 + 18 * i
        w = abs(v) / vmax * (W - left - 20)
        body.append(f'<text x="{left - 6}" y="{y + 12}" text-anchor="end" font-size="11">{escape(str(name))}</text>\n')
        body.append(f'<rect x="{left}" y="{y}" width="{_f(w)}" height="14" fill="#1f77b4"/>\n')
    return _doc(body, height=height, title=title)


def beeswarm_svg(points, order, title="SHAP values"):
    """``points`` are ``(feature, shap, normalised value)``; one row per feature in ``order``."""
    order = list(order)
    height = max(H, 30 + 22 * len(order) + PAD)
    vals = [p[1] for p in points] or [0.0]
    m = max(abs(min(vals)), abs(max(vals)), 1e-300)
    left = 170
    row = {f: i for i, f in enumerate(order)}

    def sx(v):
        return left + (v + m) / (2 * m) * (W - left - 20)

    body = [_line(sx(0.0), 30, sx(0.0), height - PAD, "gray")]
    for f in order:
        y = 40 + 22 * row[f]
        body.append(f'<text x="{left - 6}" y="{y + 4}" text-anchor="end" font-size="11">{escape(str(f))}</text>\n')
    counts = {}
    for f, v, c in points:
        if f not in row:
            continue
        k = counts.get(f, 0)
        counts[f] = k + 1
        jitter = ((k * 7919) % 13 - 6) * 0.9
        red = int(round(255 * c))
        body.append(f'<circle cx="{_f(sx(v))}" cy="{_f(40 + 22 * row[f] + jitter)}" r="1.8" '
                    f'fill="rgb({red},0,{255 - red})"/>\n')
    return _doc(body, height=height, title=title)


def rmse_boxplot_svg(groups, title="Cross-validated RMSE"):
    """Box plot per ``{label: [values]}`` (quartiles, whiskers at min/max)."""
    labels = list(groups)
    allv = [v for k in labels for v in groups[k]] or [0.0, 1.0]
    lo, hi = min(allv), max(allv)
    if hi <= lo:
        hi = lo + 1.0
    width = max(W, PAD * 2 + 60 * len(labels))

    def sy(v):
        return H - PAD - (v - lo) / (hi - lo) * (H - 2 * PAD)

    body = [_line(PAD, PAD, PAD, H - PAD)]
    for i, k in enumerate(labels):
        v = np.asarray(groups[k], float)
        if v.size == 0:
            continue
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
        x = PAD + 30 + 60 * i
        body.append(_line(x, sy(v.min()), x, sy(v.max())))
        body.append(f'<rect x="{x - 15}" y="{_f(sy(q3))}" width="30" height="{_f(sy(q1) - sy(q3))}" '
                    f'fill="#aec7e8" stroke="black"/>\n')
        body.append(_line(x - 15, sy(med), x + 15, sy(med), width=2.0))
        body.append(f'<text x="{x}" y="{H - PAD + 14}" text-anchor="middle" font-size="9">{escape(str(k))}</text>\n')
    return _doc(body, width=width, title=title)
