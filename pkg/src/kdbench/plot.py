"""Slice plots of workspace verdict grids, rendered as standalone SVG.

A report's verdicts live on a resolution^3 grid indexed row-major with the
cube-axis coordinate slowest.  ``render_slice`` extracts one plane of that
grid and draws the remaining two grid coordinates as a scatter, one circle
per point, colored by verdict status.  Output is built from fixed-format
strings only, so the same report and parameters always produce the same
bytes.
"""

from __future__ import annotations

import json
from xml.sax.saxutils import escape

VALID_COLOR = "#2ca02c"
NEAR_SINGULAR_COLOR = "#1f77b4"
UNREACHABLE_COLOR = "#d62728"

STATUS_COLORS = {
    "valid": VALID_COLOR,
    "near_singular": NEAR_SINGULAR_COLOR,
    "unreachable": UNREACHABLE_COLOR,
}

SLICE_AXES = ("x", "y", "z")

# canvas layout, pixels
_PLOT_SIZE = 480.0
_MARGIN_LEFT = 90.0
_MARGIN_TOP = 70.0
_MARKER_RADIUS = 7.0
_LEGEND_SWATCH = 14.0
_WIDTH = 660
_HEIGHT = 700


class PlotError(ValueError):
    """Raised when a report document cannot be sliced as requested."""


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def slice_indices(resolution: int, axis: str, slice_index: int) -> list[int]:
    """Flat verdict indices of the plane ``axis == slice_index``.

    Grid flattening is row-major over (u, v, w) where u follows the cube
    axis; slice axis "x" fixes u, "y" fixes v, "z" fixes w.
    """
    if axis not in SLICE_AXES:
        raise PlotError(f"slice axis must be one of {SLICE_AXES}, got {axis!r}")
    if not 0 <= slice_index < resolution:
        raise PlotError(
            f"slice index {slice_index} out of range for resolution {resolution}"
        )
    n = resolution
    out = []
    for flat in range(n * n * n):
        u, rem = divmod(flat, n * n)
        v, w = divmod(rem, n)
        coord = {"x": u, "y": v, "z": w}[axis]
        if coord == slice_index:
            out.append(flat)
    return out


def _plane_coords(flat: int, resolution: int, axis: str) -> tuple[int, int]:
    """(horizontal, vertical) grid coordinates of a point within the slice."""
    n = resolution
    u, rem = divmod(flat, n * n)
    v, w = divmod(rem, n)
    if axis == "x":
        return v, w
    if axis == "y":
        return u, w
    return u, v


_PLANE_LABELS = {"x": ("grid y", "grid z"), "y": ("grid x", "grid z"), "z": ("grid x", "grid y")}


def _axis_range(grid_axis: str, side: float) -> tuple[float, float]:
    """Meter span of one grid coordinate: the cube axis runs [0, side],
    the two cross axes are centered on the chain origin."""
    if grid_axis == "grid x":
        return 0.0, side
    return -side / 2.0, side / 2.0


def render_slice(report: dict, axis: str, slice_index: int, manifest: dict) -> str:
    """Render one grid plane of a kd_report document as an SVG string.

    ``manifest`` is embedded verbatim (canonical key order) in a
    ``<metadata>`` element so the artifact records how it was produced.
    """
    if report.get("kind") != "kd_report":
        raise PlotError(f"expected a kd_report document, got kind={report.get('kind')!r}")
    try:
        resolution = int(report["config_echo"]["grid"]["resolution"])
        side = float(report["config_echo"]["grid"]["side_length"])
        verdicts = report["verdicts"]
        chain_name = report["chain_name"]
        kd = float(report["kd"])
    except (KeyError, TypeError) as exc:
        raise PlotError(f"report document is missing required fields: {exc}") from exc
    if len(verdicts) != resolution ** 3:
        raise PlotError(
            f"verdict count {len(verdicts)} does not match resolution {resolution}^3"
        )

    by_index = {}
    for v in verdicts:
        by_index[int(v["index"])] = str(v["status"])

    chosen = slice_indices(resolution, axis, slice_index)

    span = _PLOT_SIZE
    x0 = _MARGIN_LEFT
    y0 = _MARGIN_TOP

    def point_px(h: int, k: int) -> tuple[float, float]:
        if resolution == 1:
            return x0 + span / 2.0, y0 + span / 2.0
        t_h = h / (resolution - 1)
        t_k = k / (resolution - 1)
        return x0 + t_h * span, y0 + (1.0 - t_k) * span

    circles = []
    counts = {"valid": 0, "near_singular": 0, "unreachable": 0}
    for flat in chosen:
        status = by_index.get(flat)
        if status not in STATUS_COLORS:
            raise PlotError(f"verdict {flat} has unknown status {status!r}")
        counts[status] += 1
        h, k = _plane_coords(flat, resolution, axis)
        cx, cy = point_px(h, k)
        circles.append(
            f'  <circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(_MARKER_RADIUS)}" '
            f'fill="{STATUS_COLORS[status]}" />'
        )

    h_label, v_label = _PLANE_LABELS[axis]
    h_lo, h_hi = _axis_range(h_label, side)
    v_lo, v_hi = _axis_range(v_label, side)
    s_lo, s_hi = _axis_range("grid x" if axis == "x" else "grid y", side)
    if resolution == 1:
        slice_value = (s_lo + s_hi) / 2.0
    else:
        slice_value = s_lo + slice_index * (s_hi - s_lo) / (resolution - 1)
    title = f"{chain_name}  KD={kd:.4f}  slice {axis}[{slice_index}] = {slice_value:.3f} m"
    manifest_json = escape(json.dumps(manifest, sort_keys=True))

    legend_y = y0 + span + 60.0
    legend = []
    lx = x0
    for status in ("valid", "near_singular", "unreachable"):
        legend.append(
            f'  <rect x="{_fmt(lx)}" y="{_fmt(legend_y)}" width="{_fmt(_LEGEND_SWATCH)}" '
            f'height="{_fmt(_LEGEND_SWATCH)}" fill="{STATUS_COLORS[status]}" />'
        )
        legend.append(
            f'  <text x="{_fmt(lx + _LEGEND_SWATCH + 6.0)}" y="{_fmt(legend_y + 12.0)}" '
            f'font-family="sans-serif" font-size="14">{status} ({counts[status]})</text>'
        )
        lx += 190.0

    frame = (
        f'  <rect x="{_fmt(x0 - 20.0)}" y="{_fmt(y0 - 20.0)}" width="{_fmt(span + 40.0)}" '
        f'height="{_fmt(span + 40.0)}" fill="none" stroke="#999999" />'
    )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f"  <metadata>{manifest_json}</metadata>",
        f'  <rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff" />',
        f'  <text x="{_fmt(x0)}" y="34.00" font-family="sans-serif" font-size="18">'
        f"{escape(title)}</text>",
        frame,
        *circles,
        f'  <text x="{_fmt(x0 + span / 2.0)}" y="{_fmt(y0 + span + 44.0)}" '
        f'font-family="sans-serif" font-size="14" text-anchor="middle">{h_label} (m)</text>',
        f'  <text x="{_fmt(x0 - 52.0)}" y="{_fmt(y0 + span / 2.0)}" font-family="sans-serif" '
        f'font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 {_fmt(x0 - 52.0)} {_fmt(y0 + span / 2.0)})">{v_label} (m)</text>',
        f'  <text x="{_fmt(x0)}" y="{_fmt(y0 + span + 44.0)}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">{h_lo:.3f}</text>',
        f'  <text x="{_fmt(x0 + span)}" y="{_fmt(y0 + span + 44.0)}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">{h_hi:.3f}</text>',
        f'  <text x="{_fmt(x0 - 30.0)}" y="{_fmt(y0 + span + 4.0)}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">{v_lo:.3f}</text>',
        f'  <text x="{_fmt(x0 - 30.0)}" y="{_fmt(y0 + 4.0)}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">{v_hi:.3f}</text>',
        *legend,
        "</svg>",
    ]
    return "\n".join(parts) + "\n"
