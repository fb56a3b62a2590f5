"""Figure rendering for scattering diagrams and tropical curves.

Everything here is presentation-only: the SVG artifacts are meant for
human eyes and are deliberately excluded from any verification hashing.
Coordinates are converted to floats at the last moment; the exact
arithmetic lives in the other modules.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from tropvert.series import rat_str  # noqa: E402

# stable ids inside the SVG so identical figures serialize identically
plt.rcParams["svg.hashsalt"] = "tropvert"

_LINE_STYLE = {"color": "#36618e", "lw": 1.6}
_RAY_STYLE = {"color": "#b3362b", "lw": 1.4}
_SVG_META = {"Date": None}


def _norm(v) -> float:
    return max(abs(float(v[0])), abs(float(v[1]))) or 1.0


def _save(fig, path):
    if path is not None:
        fig.savefig(path, format="svg", metadata=_SVG_META,
                    bbox_inches="tight")
        plt.close(fig)
        return None
    return fig


def render_diagram(diagram, path=None, title=None, annotate=True,
                   radius=None):
    """Draw the walls of a scattering diagram.

    Lines span the whole frame, rays start at their base point.  With
    ``annotate`` each ray is labeled by its direction.  Returns the
    figure when ``path`` is None, otherwise writes an SVG and closes.
    """
    walls = list(diagram.walls)
    if radius is None:
        radius = 1.0
        for w in walls:
            radius = max(radius, 1.5 * _norm(w.base))
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    for w in walls:
        bx, by = float(w.base[0]), float(w.base[1])
        dx, dy = float(w.direction[0]), float(w.direction[1])
        scale = radius / _norm(w.direction) * 1.6
        if w.kind == "line":
            ax.plot([bx - dx * scale, bx + dx * scale],
                    [by - dy * scale, by + dy * scale], **_LINE_STYLE)
        else:
            ax.plot([bx, bx + dx * scale], [by, by + dy * scale],
                    **_RAY_STYLE)
            ax.plot([bx], [by], "o", ms=3, color=_RAY_STYLE["color"])
            if annotate:
                lx = bx + dx / _norm(w.direction) * radius * 0.92
                ly = by + dy / _norm(w.direction) * radius * 0.92
                ax.annotate(f"({w.direction[0]},{w.direction[1]})",
                            (lx, ly), fontsize=7, ha="center",
                            color=_RAY_STYLE["color"])
    ax.plot([0], [0], "ko", ms=4)
    ax.set_xlim(-radius * 1.15, radius * 1.15)
    ax.set_ylim(-radius * 1.15, radius * 1.15)
    ax.set_aspect("equal")
    ax.grid(True, lw=0.3, alpha=0.4)
    ax.set_xticklabels([])
    ax.set_yticklabels([])
    if title:
        ax.set_title(title, fontsize=10)
    return _save(fig, path)


def _curve_points(curve):
    pts = [(float(x), float(y)) for x, y in curve.vertices]
    for e in curve.edges:
        for p in (e.tail, e.head):
            if p is not None:
                pts.append((float(p[0]), float(p[1])))
    return pts or [(0.0, 0.0)]


def _draw_curve(ax, curve, stub=1.0):
    for e in curve.edges:
        dx, dy = float(e.direction[0]), float(e.direction[1])
        n = _norm(e.direction)
        if e.bounded:
            (x0, y0), (x1, y1) = e.tail, e.head
            ax.plot([float(x0), float(x1)], [float(y0), float(y1)],
                    color="#2f7d4f", lw=1.2 + 0.5 * (e.weight - 1))
        elif e.tail is None:                      # incoming leaf end
            x1, y1 = float(e.head[0]), float(e.head[1])
            ax.plot([x1 - dx / n * stub, x1], [y1 - dy / n * stub, y1],
                    color="#777777", lw=1.0 + 0.5 * (e.weight - 1),
                    ls=":")
        else:                                     # outgoing end
            x0, y0 = float(e.tail[0]), float(e.tail[1])
            ax.plot([x0, x0 + dx / n * stub], [y0, y0 + dy / n * stub],
                    color="#b3362b", lw=1.2 + 0.5 * (e.weight - 1))
    for x, y in curve.vertices:
        ax.plot([float(x)], [float(y)], "ko", ms=3)
    ax.set_aspect("equal")
    ax.grid(True, lw=0.3, alpha=0.4)
    ax.tick_params(labelsize=6)


def render_curves(curves, path=None, title=None, max_curves=12, ncols=4):
    """Draw up to ``max_curves`` tropical curves in a grid, each panel
    labeled by its multiplicity."""
    curves = list(curves)[:max_curves]
    if not curves:
        raise ValueError("no curves to draw")
    ncols = min(ncols, len(curves))
    nrows = -(-len(curves) // ncols)
    fig, axes = plt.subplots(nrows, ncols,
                             figsize=(2.8 * ncols, 2.8 * nrows),
                             squeeze=False)
    for ax in axes.flat:
        ax.set_axis_off()
    for ax, curve in zip(axes.flat, curves):
        ax.set_axis_on()
        pts = _curve_points(curve)
        span = max(max(abs(x) for x, _ in pts),
                   max(abs(y) for _, y in pts), 1.0)
        _draw_curve(ax, curve, stub=span * 0.6)
        ax.set_title(f"Mult = {curve.multiplicity}", fontsize=8)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    return _save(fig, path)
