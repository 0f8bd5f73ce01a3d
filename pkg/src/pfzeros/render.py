"""Static SVG rendering of phase diagrams, zero sets, and asymptote rays."""

from __future__ import annotations

from .diagram import PhaseDiagram
from .errors import ValidationError
from .model import Rectangle

_CURVE_COLORS = ("#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf")
_ZERO_COLORS = {
    "brute_force": "#d62728",
    "two_phase_eq": "#ff7f0e",
    "multipoint_eq": "#bcbd22",
}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class _Mapper:
    def __init__(self, viewport: Rectangle, width: int, height: int, pad: int):
        self.v = viewport
        self.sx = (width - 2 * pad) / viewport.width
        self.sy = (height - 2 * pad) / viewport.height
        self.pad = pad
        self.height = height

    def __call__(self, z: complex) -> tuple[float, float]:
        x = self.pad + (z.real - self.v.re_lo) * self.sx
        y = self.height - self.pad - (z.imag - self.v.im_lo) * self.sy
        return x, y


def emit_svg(
    diagram: PhaseDiagram | None,
    zero_sets=(),
    viewport: Rectangle | None = None,
    asymptotes=(),
    width: int = 640,
    height: int = 640,
) -> str:
    """Render curves, multiple points, zeros, and dashed asymptote half-lines.

    asymptotes entries are (multiple_point, lines, N) triples; the rays live
    in the rescaled coordinate and are mapped back through z_M + zf/N.
    Empty inputs yield a valid axes-only document.
    """
    if viewport is None:
        raise ValidationError("a viewport rectangle is required")
    pad = 30
    m = _Mapper(viewport, width, height, pad)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
    ]
    # coordinate axes where they cross the viewport
    if viewport.re_lo < 0 < viewport.re_hi:
        x0, _ = m(0j)
        parts.append(
            f'<line x1="{_fmt(x0)}" y1="{pad}" x2="{_fmt(x0)}" y2="{height - pad}" '
            'stroke="#ccc" stroke-width="1"/>'
        )
    if viewport.im_lo < 0 < viewport.im_hi:
        _, y0 = m(0j)
        parts.append(
            f'<line x1="{pad}" y1="{_fmt(y0)}" x2="{width - pad}" y2="{_fmt(y0)}" '
            'stroke="#ccc" stroke-width="1"/>'
        )
    parts.append(
        f'<text x="{pad}" y="{height - 8}" font-size="11" fill="#333">'
        f"re in [{viewport.re_lo:g}, {viewport.re_hi:g}], "
        f"im in [{viewport.im_lo:g}, {viewport.im_hi:g}]</text>"
    )

    if diagram is not None:
        for k, curve in enumerate(diagram.curves):
            color = _CURVE_COLORS[k % len(_CURVE_COLORS)]
            pts = [m(s.z) for s in curve.samples]
            if len(pts) < 2:
                continue
            d = "M " + " L ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in pts)
            parts.append(
                f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        for mp in diagram.multiple_points:
            x, y = m(mp.z)
            parts.append(
                f'<rect x="{_fmt(x - 4)}" y="{_fmt(y - 4)}" width="8" height="8" '
                'fill="none" stroke="#000" stroke-width="1.5"/>'
            )

    for mp_point, lines, n_vol in asymptotes:
        reach = n_vol * (viewport.width + viewport.height)
        for ln in lines:
            z0 = mp_point.z + ln.origin_offset / n_vol
            z1 = mp_point.z + (ln.origin_offset + reach * ln.direction) / n_vol
            x0, y0 = m(z0)
            x1, y1 = m(z1)
            parts.append(
                f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}" '
                'stroke="#888" stroke-width="1" stroke-dasharray="6 4"/>'
            )

    for zs in zero_sets:
        for w in zs.zeros:
            if not viewport.contains(w.z):
                continue
            color = _ZERO_COLORS.get(w.method, "#000")
            x, y = m(w.z)
            parts.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.2" fill="{color}"/>'
            )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
