"""Tiny SVG writer for map/trajectory overlays; no plotting dependency.

World coordinates are mapped to pixels with the y axis flipped so
plots read like standard xy plots.
"""

from __future__ import annotations


class SvgCanvas:
    def __init__(self, bounds, width=720, pad=24):
        xmin, ymin, xmax, ymax = bounds
        self.bounds = (xmin, ymin, xmax, ymax)
        span_x = xmax - xmin
        span_y = ymax - ymin
        self.scale = (width - 2 * pad) / span_x
        self.width = width
        self.height = int(round(span_y * self.scale)) + 2 * pad
        self.pad = pad
        self._parts = []

    def transform(self, p):
        xmin, _, _, ymax = self.bounds
        return (
            self.pad + (p[0] - xmin) * self.scale,
            self.pad + (ymax - p[1]) * self.scale,
        )

    def _fmt_points(self, pts):
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in (self.transform(p) for p in pts))

    def rect_border(self, stroke="#444", width=1.5):
        xmin, ymin, xmax, ymax = self.bounds
        pts = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
        self.polygon(pts, fill="none", stroke=stroke, width=width)

    def polygon(self, pts, fill="#999", stroke="none", width=1.0, opacity=1.0):
        self._parts.append(
            f'<polygon points="{self._fmt_points(pts)}" fill="{fill}" '
            f'stroke="{stroke}" stroke-width="{width}" fill-opacity="{opacity}"/>'
        )

    def circle(self, center, radius, fill="#999", stroke="none", width=1.0, opacity=1.0):
        cx, cy = self.transform(center)
        self._parts.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius * self.scale:.2f}" '
            f'fill="{fill}" stroke="{stroke}" stroke-width="{width}" fill-opacity="{opacity}"/>'
        )

    def polyline(self, pts, stroke="#06c", width=1.5, dash=None):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self._parts.append(
            f'<polyline points="{self._fmt_points(pts)}" fill="none" '
            f'stroke="{stroke}" stroke-width="{width}"{dash_attr}/>'
        )

    def marker(self, p, label, fill="#000", size=4.0):
        cx, cy = self.transform(p)
        self._parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{size:.1f}" fill="{fill}"/>')
        self._parts.append(
            f'<text x="{cx + 6:.2f}" y="{cy - 6:.2f}" font-size="12" '
            f'font-family="sans-serif" fill="{fill}">{label}</text>'
        )

    def legend(self, entries, x=12, y=16):
        for i, (label, color) in enumerate(entries):
            yy = y + 16 * i
            self._parts.append(
                f'<line x1="{x}" y1="{yy}" x2="{x + 22}" y2="{yy}" '
                f'stroke="{color}" stroke-width="2.5"/>'
            )
            self._parts.append(
                f'<text x="{x + 28}" y="{yy + 4}" font-size="12" '
                f'font-family="sans-serif" fill="#222">{label}</text>'
            )

    def to_string(self):
        body = "\n".join(self._parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
        )

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_string())


def draw_map(canvas, obstacle_map):
    from fliess.planner import Circle, Polygon

    canvas.rect_border()
    for ob in obstacle_map.obstacles:
        if isinstance(ob, Circle):
            canvas.circle(ob.center, ob.radius, fill="#b0b0b0", stroke="#555")
        elif isinstance(ob, Polygon):
            canvas.polygon(ob.vertices, fill="#b0b0b0", stroke="#555")
    canvas.marker(obstacle_map.start, "start", fill="#0a0")
    canvas.marker(obstacle_map.goal, "goal", fill="#a00")
