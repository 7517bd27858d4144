"""Figure rendering: chain region shading with boundary polylines.

Renders the (t, s) square with the chain's projection shaded and the
traced loops drawn on top, in the style of the worked examples' figures.
Backend is forced to Agg so the CLI can run headless.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .chains import BoundaryPath, RegionMask, deninger_region, trace_boundary
from .poly import LaurentPoly

__all__ = ["plot_chain", "render_chain_figure"]


def plot_chain(mask: RegionMask, paths: list[BoundaryPath], title: str = "",
               singular=()):
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    extent = (-math.pi, math.pi, -math.pi, math.pi)
    ax.imshow(
        mask.mask.T,
        origin="lower",
        extent=extent,
        cmap="Greys",
        vmin=0,
        vmax=2.6,
        interpolation="nearest",
        aspect="equal",
    )
    for path in paths:
        if path.ts is None:
            continue
        ts = path.ts.copy()
        t = (ts[:, 0] + math.pi) % (2 * math.pi) - math.pi
        s = (ts[:, 1] + math.pi) % (2 * math.pi) - math.pi
        # break the polyline at wrap jumps
        jump = np.where(
            (np.abs(np.diff(t)) > math.pi) | (np.abs(np.diff(s)) > math.pi)
        )[0]
        start = 0
        for j in list(jump) + [len(t) - 1]:
            ax.plot(t[start : j + 1], s[start : j + 1], "k-", lw=1.2)
            start = j + 1
    for x, y in singular:
        ax.plot(
            [math.atan2(x.imag, x.real)],
            [math.atan2(y.imag, y.real)],
            "ko",
            ms=6,
            mfc="white",
        )
    ax.set_xlabel("t  (x = e^{it})")
    ax.set_ylabel("s  (y = e^{is})")
    ax.set_xlim(-math.pi, math.pi)
    ax.set_ylim(-math.pi, math.pi)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def render_chain_figure(P: LaurentPoly, out: str, resolution: int = 256,
                        step: float = 4e-3, grid: int = 128, title: str = ""):
    """Trace the chain of P and write the region/boundary figure to ``out``."""
    mask = deninger_region(P, resolution)
    paths = trace_boundary(P, step=step, grid=grid)
    fig = plot_chain(mask, paths, title=title)
    fig.savefig(out)
    plt.close(fig)
    return len(paths)
