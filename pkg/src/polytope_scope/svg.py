"""Dependency-free SVG figures: decompositions, Fiedler partitions, heat maps and curves.

Output is a deterministic function of the input: elements are emitted in id
order and every coordinate goes through the same fixed-precision formatter.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = {
    "vertex": "#d62728",
    "edge": "#1f4e9c",
    "face": "#9ecae1",
    "frame": "#000000",
    "positive": "#1f77b4",
    "negative": "#8c3fbf",
    "loss": "#ff7f0e",
    "beta0": "#1f77b4",
    "beta1": "#d62728",
    "f0": "#1f77b4",
    "f1": "#2ca02c",
    "f2": "#d62728",
    "heat_low": (255, 255, 255),
    "heat_high": (8, 48, 107),
    "axis": "#444444",
}


def _n(x) -> str:
    return f"{float(x):.4f}".rstrip("0").rstrip(".") if np.isfinite(x) else "0"


class Canvas:
    def __init__(self, width, height):
        self.width, self.height = width, height
        self.parts = []

    def add(self, s):
        self.parts.append(s)

    def rect(self, x, y, w, h, fill, cls=None, stroke="none", extra=""):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<rect{c} x="{_n(x)}" y="{_n(y)}" width="{_n(w)}" height="{_n(h)}" '
                 f'fill="{fill}" stroke="{stroke}"{extra}/>')

    def line(self, x1, y1, x2, y2, stroke, width=1.0, cls=None):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<line{c} x1="{_n(x1)}" y1="{_n(y1)}" x2="{_n(x2)}" y2="{_n(y2)}" '
                 f'stroke="{stroke}" stroke-width="{_n(width)}"/>')

    def circle(self, x, y, r, fill, cls=None):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<circle{c} cx="{_n(x)}" cy="{_n(y)}" r="{_n(r)}" fill="{fill}"/>')

    def polygon(self, pts, fill, cls=None, opacity=1.0, stroke="none"):
        c = f' class="{cls}"' if cls else ""
        p = " ".join(f"{_n(x)},{_n(y)}" for x, y in pts)
        self.add(f'<polygon{c} points="{p}" fill="{fill}" fill-opacity="{_n(opacity)}" stroke="{stroke}"/>')

    def polyline(self, pts, stroke, width=1.5, cls=None):
        c = f' class="{cls}"' if cls else ""
        p = " ".join(f"{_n(x)},{_n(y)}" for x, y in pts)
        self.add(f'<polyline{c} points="{p}" fill="none" stroke="{stroke}" stroke-width="{_n(width)}"/>')

    def text(self, x, y, s, size=12, anchor="start", rotate=None):
        r = f' transform="rotate({rotate} {_n(x)} {_n(y)})"' if rotate is not None else ""
        self.add(f'<text x="{_n(x)}" y="{_n(y)}" font-size="{size}" font-family="sans-serif" '
                 f'text-anchor="{anchor}"{r}>{escape(str(s))}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        return "\n".join([head] + self.parts + ["</svg>"]) + "\n"


@dataclass(frozen=True)
class Window:
    x_min: float
    x_max: float
    y_min: float
    y_max: float


def _window(cx, zoom):
    if zoom is None:
        b = cx.box
        return Window(b.x_min, b.x_max, b.y_min, b.y_max)
    return Window(*zoom)


def _mapper(win: Window, size, margin):
    sx = (size - 2 * margin) / (win.x_max - win.x_min)
    sy = (size - 2 * margin) / (win.y_max - win.y_min)

    def to_px(pts):
        pts = np.atleast_2d(pts)
        return np.column_stack([margin + (pts[:, 0] - win.x_min) * sx,
                                size - margin - (pts[:, 1] - win.y_min) * sy])
    return to_px


def _overlaps(pts, win: Window):
    pts = np.atleast_2d(pts)
    return not (pts[:, 0].max() < win.x_min or pts[:, 0].min() > win.x_max
                or pts[:, 1].max() < win.y_min or pts[:, 1].min() > win.y_max)


def _inside(p, win: Window):
    return win.x_min <= p[0] <= win.x_max and win.y_min <= p[1] <= win.y_max


def _complex_layers(canvas, cx, win, to_px, margin, face_fill=None, draw_vertices=True):
    size = canvas.width
    canvas.add(f'<clipPath id="win"><rect x="{margin}" y="{margin}" width="{size - 2 * margin}" '
               f'height="{size - 2 * margin}"/></clipPath>')
    canvas.add('<g clip-path="url(#win)">')
    for f, cyc in enumerate(cx.face_vertices):
        poly = cx.vertices[cyc]
        if _overlaps(poly, win):
            fill = face_fill(f) if face_fill else PALETTE["face"]
            canvas.polygon(to_px(poly), fill, cls="face", opacity=0.45)
    for a, b in cx.edges.tolist():
        seg = cx.vertices[[a, b]]
        if _overlaps(seg, win):
            (x1, y1), (x2, y2) = to_px(seg)
            canvas.line(x1, y1, x2, y2, PALETTE["edge"], 1.0, cls="edge")
    if draw_vertices:
        for p in cx.vertices:
            if _inside(p, win):
                (x, y), = to_px(p)
                canvas.circle(x, y, 2.0, PALETTE["vertex"], cls="vertex")
    canvas.add("</g>")
    canvas.rect(margin, margin, size - 2 * margin, size - 2 * margin, "none", cls="frame", stroke=PALETTE["frame"])


def render_decomposition_svg(cx, zoom=None, size=600, margin=20, title=None) -> str:
    """Faces, edges and vertices of a complex; ``zoom`` is (x_min, x_max, y_min, y_max)."""
    win = _window(cx, zoom)
    to_px = _mapper(win, size, margin)
    canvas = Canvas(size, size)
    canvas.rect(0, 0, size, size, "#ffffff")
    _complex_layers(canvas, cx, win, to_px, margin)
    if title:
        canvas.text(size / 2, margin - 5, title, anchor="middle")
    return canvas.render()


def render_partition_svg(cx, report, zoom=None, size=600, margin=20, points=None, labels=None, title=None) -> str:
    """One marker per dual-graph node at its face centroid, coloured by Fiedler sign."""
    win = _window(cx, zoom)
    to_px = _mapper(win, size, margin)
    canvas = Canvas(size, size)
    canvas.rect(0, 0, size, size, "#ffffff")
    _complex_layers(canvas, cx, win, to_px, margin, draw_vertices=False)
    if points is not None:
        for p, y in zip(np.asarray(points), labels):
            if _inside(p, win):
                (x, yy), = to_px(p)
                canvas.circle(x, yy, 1.5, "#333333" if y else "#aaaaaa", cls="datum")
    for f, s in enumerate(report.signs):
        c = cx.face_centroid(f)
        if _inside(c, win):
            (x, y), = to_px(c)
            canvas.circle(x, y, 4.0, PALETTE["positive"] if s > 0 else PALETTE["negative"], cls="node")
    if title:
        canvas.text(size / 2, margin - 5, title, anchor="middle")
    return canvas.render()


def _heat_colour(v, vmax):
    t = 0.0 if vmax <= 0 else min(max(v / vmax, 0.0), 1.0)
    lo, hi = PALETTE["heat_low"], PALETTE["heat_high"]
    r, g, b = (int(round(l + t * (h - l))) for l, h in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def _loss_axis(loss):
    loss = np.asarray(loss, dtype=np.float64)
    if np.all(loss > 0):
        return np.log10(loss), "log10 loss"
    return loss, "loss"


def _scale(vals, lo_px, hi_px):
    vals = np.asarray(vals, dtype=np.float64)
    lo, hi = float(np.min(vals)), float(np.max(vals))
    if hi - lo < 1e-300:
        return np.full(vals.shape, (lo_px + hi_px) / 2)
    return lo_px + (vals - lo) / (hi - lo) * (hi_px - lo_px)


def render_heatmap_svg(grid, width=720, height=420, title=None) -> str:
    """Epoch-by-filtration heat map, colour linear in [0, max], loss on a secondary axis."""
    left, right, top, bottom = 60, 70, 30, 50
    pw, ph = width - left - right, height - top - bottom
    n_ep, n_bins = grid.values.shape
    vmax = float(grid.values.max()) if grid.values.size else 0.0
    canvas = Canvas(width, height)
    canvas.rect(0, 0, width, height, "#ffffff")
    cw, ch = pw / n_ep, ph / n_bins
    for i in range(n_ep):
        for j in range(n_bins):
            canvas.rect(left + i * cw, top + ph - (j + 1) * ch, cw + 0.01, ch + 0.01,
                        _heat_colour(grid.values[i, j], vmax), cls="cell")
    canvas.rect(left, top, pw, ph, "none", cls="frame", stroke=PALETTE["frame"])
    vals, label = _loss_axis(grid.loss)
    xs = left + (np.arange(n_ep) + 0.5) * cw
    ys = _scale(vals, top + ph, top)
    canvas.polyline(np.column_stack([xs, ys]), PALETTE["loss"], cls="loss")
    for i in sorted({0, n_ep - 1}):
        canvas.text(xs[i], top + ph + 16, grid.epochs[i], size=10, anchor="middle")
    canvas.text(left + pw / 2, height - 10, "epoch", anchor="middle")
    canvas.text(15, top + ph / 2, "cells added / max cells", anchor="middle", rotate=-90)
    canvas.text(width - 15, top + ph / 2, label, anchor="middle", rotate=90)
    canvas.text(left - 5, top + ph, "0", size=10, anchor="end")
    canvas.text(left - 5, top + 10, "1", size=10, anchor="end")
    canvas.text(left + pw / 2, top - 10, title or f"beta{grid.dim} (max {vmax:.4g})", anchor="middle")
    return canvas.render()


def _line_chart(series, x, width, height, title, xlabel, overlay=None):
    left, right, top, bottom = 60, 70, 30, 50
    pw, ph = width - left - right, height - top - bottom
    canvas = Canvas(width, height)
    canvas.rect(0, 0, width, height, "#ffffff")
    canvas.rect(left, top, pw, ph, "none", cls="frame", stroke=PALETTE["frame"])
    x = np.asarray(x, dtype=np.float64)
    ymax = max([float(np.max(s)) for _, s, _ in series] + [1e-12])
    xs = _scale(x, left, left + pw)
    for name, s, colour in series:
        ys = top + ph - np.asarray(s, dtype=np.float64) / ymax * ph
        canvas.polyline(np.column_stack([xs, ys]), colour, cls=f"series-{name}")
    for k, (name, _, colour) in enumerate(series):
        canvas.text(left + 8, top + 16 + 14 * k, name, size=11)
    if overlay is not None:
        vals, label = _loss_axis(overlay)
        canvas.polyline(np.column_stack([xs, _scale(vals, top + ph, top)]), PALETTE["loss"], cls="loss")
        canvas.text(width - 15, top + ph / 2, label, anchor="middle", rotate=90)
    canvas.text(left - 5, top + 10, f"{ymax:.4g}", size=10, anchor="end")
    canvas.text(left - 5, top + ph, "0", size=10, anchor="end")
    canvas.text(left, top + ph + 16, f"{x[0]:.4g}", size=10, anchor="middle")
    canvas.text(left + pw, top + ph + 16, f"{x[-1]:.4g}", size=10, anchor="middle")
    canvas.text(left + pw / 2, height - 10, xlabel, anchor="middle")
    canvas.text(left + pw / 2, top - 10, title, anchor="middle")
    return canvas.render()


def render_curves_svg(curves, title="averaged Betti curves", width=720, height=420) -> str:
    """Averaged beta0/beta1 against the percentage of cells added."""
    series = [("beta0", curves.beta0, PALETTE["beta0"]), ("beta1", curves.beta1, PALETTE["beta1"])]
    return _line_chart(series, curves.percent, width, height, title, "% of cells added")


def render_fvector_svg(epochs, fvectors, loss, title="f-vector over training", width=720, height=420) -> str:
    f = np.array([fv.as_tuple() for fv in fvectors], dtype=np.float64)
    series = [("f0", f[:, 0], PALETTE["f0"]), ("f1", f[:, 1], PALETTE["f1"]), ("f2", f[:, 2], PALETTE["f2"])]
    return _line_chart(series, epochs, width, height, title, "epoch", overlay=loss)
