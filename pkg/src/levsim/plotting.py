"""Phase-space figure rendering for the report path.

Produces a four-panel figure (simulated density and stationary-model
density for each particle) and saves it as SVG with deterministic bytes:
the SVG hash salt is pinned and the embedded date stripped, so re-running
the same configuration yields an identical file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .analysis import PhaseSpaceHistogram  # noqa: E402
from .fp_oracle import StationaryDensity  # noqa: E402

__all__ = ["phase_space_figure", "save_figure"]

# Fixed salt so SVG glyph ids do not depend on the process environment.
matplotlib.rcParams["svg.hashsalt"] = "levsim"


def _panel(ax, q_edges, p_edges, values, label):
    mesh = ax.pcolormesh(q_edges, p_edges, values.T, cmap="viridis",
                         shading="flat", rasterized=True)
    ax.set_xlabel("Q")
    ax.set_ylabel("P")
    ax.set_title(label, fontsize=10)
    ax.set_aspect("equal")
    return mesh


def phase_space_figure(hist1: PhaseSpaceHistogram,
                       hist2: PhaseSpaceHistogram,
                       oracle1: StationaryDensity | None = None,
                       oracle2: StationaryDensity | None = None,
                       title: str | None = None):
    """Quadrant figure: sampled vs. stationary-model phase-space densities.

    Left column particle 1, right column particle 2; top row the ensemble
    histograms, bottom row the corresponding stationary densities evaluated
    on the same grids (blank when a model density is unavailable for the
    parameter set).
    """
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 7.4), constrained_layout=True)
    _panel(axes[0, 0], hist1.q_edges, hist1.p_edges, hist1.density,
           "particle 1 - simulated")
    _panel(axes[0, 1], hist2.q_edges, hist2.p_edges, hist2.density,
           "particle 2 - simulated")
    for ax, hist, oracle, name in (
            (axes[1, 0], hist1, oracle1, "particle 1"),
            (axes[1, 1], hist2, oracle2, "particle 2")):
        if oracle is None:
            ax.set_axis_off()
            ax.text(0.5, 0.5, "no closed-form density\nfor these parameters",
                    ha="center", va="center", transform=ax.transAxes,
                    fontsize=9)
            continue
        qq, pp = np.meshgrid(hist.q_centers, hist.p_centers, indexing="ij")
        vals = oracle.density(qq, pp)
        _panel(ax, hist.q_edges, hist.p_edges, vals,
               "%s - stationary model" % name)
    if title:
        fig.suptitle(title, fontsize=11)
    return fig


def save_figure(fig, path) -> None:
    """Write the figure as SVG with reproducible bytes."""
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
