"""SVG figures: generatrix families, psi isolines and velocity glyphs.

Meridian glyphs follow the curve tangent; swirl glyphs are drawn along the
in-plane normal of the curve.  Both are scaled by `glyph_scale`, so a unit
velocity shows up with total length glyph_scale.
"""

import io

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .fileio import atomic_write  # noqa: E402
from .profiles import series_beta_gamma  # noqa: E402

GLYPH_SCALE = 0.25

STYLE = {
    "svg.hashsalt": "gavriflow",
    "svg.fonttype": "path",
    "font.size": 9,
    "lines.linewidth": 1.0,
    "axes.linewidth": 0.6,
}


def _save(fig, path):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    atomic_write(path, buf.getvalue())


def curve_glyphs(z, f, fz, beta, scale=GLYPH_SCALE, stride=40):
    """Glyph segments on the curve r = f(z): rows (r, z, dr_m, dz_m, dr_s, dz_s)."""
    idx = np.arange(0, len(z), stride)
    out = []
    for j in idx:
        r, s = f[j], fz[j]
        if not (np.isfinite(r) and np.isfinite(s)) or r * r <= beta:
            continue
        n = np.hypot(1.0, s)
        um = np.sqrt(1 - beta / (r * r))
        ut = np.sqrt(beta) / r
        out.append((r, z[j], scale * um * s / n, scale * um / n, scale * ut / n, -scale * ut * s / n))
    return np.array(out).reshape(-1, 6)


def isoline_glyphs(poly, line, psi_level, scale=GLYPH_SCALE, stride=12, series_order=16):
    """Glyph segments on a psi level line: rows (r, z, dr_m, dz_m, dr_s, dz_s)."""
    bs, _ = series_beta_gamma(series_order)
    beta = float(bs(psi_level))
    pts = line[::stride]
    gr, gz = poly.gradient(pts[:, 0], pts[:, 1])
    g = np.hypot(gr, gz)
    r = pts[:, 0]
    with np.errstate(invalid="ignore"):
        um = np.sqrt(np.clip(1 - beta / (r * r), 0, None))
        ut = np.sqrt(max(beta, 0.0)) / r
    rows = np.column_stack([r, pts[:, 1], -scale * um * gz / g, scale * um * gr / g,
                            scale * ut * gr / g, scale * ut * gz / g])
    return rows[np.all(np.isfinite(rows), axis=1)]


def _draw_glyphs(ax, rows, swap=False):
    for r, z, dr, dz, sr, sz in rows:
        if swap:
            ax.plot([z, z + dz], [r, r + dr], color="tab:red", lw=0.7)
            ax.plot([z, z + sz], [r, r + sr], color="tab:blue", lw=0.7)
        else:
            ax.plot([r, r + dr], [z, z + dz], color="tab:red", lw=0.7)
            ax.plot([r, r + sr], [z, z + sz], color="tab:blue", lw=0.7)


def plot_generatrices(curves, glyphs, path, title=None):
    """curves: list of (label, z, f); glyphs: list of glyph row arrays.  z runs horizontally."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7, 3.5))
        for n, (label, z, f) in enumerate(curves):
            ax.plot(z, f, color="black", lw=0.8)
            if n in (0, len(curves) - 1) and np.isfinite(f).any():
                k = int(np.nanargmax(f))
                dy = 4 if n else -10
                ax.annotate(label, (z[k], f[k]), fontsize=7, xytext=(2, dy), textcoords="offset points")
        for rows in glyphs:
            _draw_glyphs(ax, rows, swap=True)
        ax.set_xlabel("z")
        ax.set_ylabel("r")
        ax.set_aspect("equal")
        if title:
            ax.set_title(title)
        _save(fig, path)


def plot_isolines(lines, glyphs, path, title=None, points=()):
    """lines: {label: [polyline, ...]}; points: [(r, z, kind)].  r runs horizontally."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        for label, pieces in lines.items():
            for k, c in enumerate(pieces):
                ax.plot(c[:, 0], c[:, 1], color="black", lw=0.8)
                if k == 0 and len(c):
                    ax.annotate(label, (c[0, 0], c[0, 1]), fontsize=7)
        for rows in glyphs:
            _draw_glyphs(ax, rows)
        for r, z, kind in points:
            ax.plot([r], [z], marker="x" if kind == "saddle" else "o", color="tab:green", ms=4)
        ax.set_xlabel("r")
        ax.set_ylabel("z")
        ax.set_aspect("equal")
        if title:
            ax.set_title(title)
        _save(fig, path)


def plot_profiles(table, path):
    """table rows (p, alpha, beta, gamma, ...)."""
    t = np.asarray(table)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for col, name in ((1, "alpha"), (2, "beta"), (3, "gamma")):
            ax.plot(t[:, 0], t[:, col], label=name)
        ax.set_xlabel("p")
        ax.set_yscale("symlog", linthresh=1.0)
        ax.legend()
        _save(fig, path)
