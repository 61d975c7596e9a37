"""Matplotlib rendering of Stokes graphs and singularity graphs to files.

SVG or PNG per the output extension; figures carry the same styling across
the report pipeline so runs are comparable at a glance.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

LINE_STYLE = {
    "naive": dict(color="0.65", lw=0.9, ls=":"),
    "true": dict(color="tab:blue", lw=1.8, ls="-"),
    "higher": dict(color="tab:brown", lw=1.4, ls="--"),
}

PAIR_COLORS = {
    (0, 1): "tab:cyan", (0, 2): "tab:red", (1, 2): "tab:green",
    (1, 0): "tab:olive", (2, 0): "tab:pink", (2, 1): "tab:purple",
}


def render_stokes_graph(data, path, title=None, show_inactive=True):
    """Draw a StokesGraphData: true lines solid (colored per pair), naive
    remainders dotted, higher-order lines dashed, turning points marked."""
    fig, ax = plt.subplots(figsize=(7.2, 6.0))
    a, b, c, d = data.window
    for line in data.lines:
        pts = np.asarray(line.points)
        act = np.asarray(line.active, dtype=bool)
        if line.kind == "naive":
            if show_inactive:
                ax.plot(pts.real, pts.imag, **LINE_STYLE["naive"], zorder=1)
            continue
        style = dict(LINE_STYLE[line.kind])
        if line.kind == "true":
            style["color"] = PAIR_COLORS.get(tuple(line.indices), "tab:blue")
        segs = _active_segments(pts, act)
        for seg in segs:
            ax.plot(seg.real, seg.imag, **style, zorder=3,
                    label=_once(ax, f"{line.kind} {tuple(line.indices)}"))
    for tp in data.turning_points:
        marker = "o" if tp.kind == "genuine" else "s"
        ax.plot([tp.z.real], [tp.z.imag], marker, ms=7,
                mfc=("k" if tp.kind == "genuine" else "w"), mec="k", zorder=5)
        ax.annotate(f"{tp.pair}", (tp.z.real, tp.z.imag), textcoords="offset points",
                    xytext=(6, 6), fontsize=8)
    # region bits as faint background dots
    grid = data.regions.get("grid") or []
    bits = data.regions.get("bits") or []
    for (x, y), bb in zip(grid, bits):
        if not bb:
            continue
        inside = any(v == 0 for v in bb.values() if v is not None)
        ax.plot([x], [y], ".", color=("tab:orange" if inside else "0.85"),
                ms=3, alpha=0.6, zorder=0)
    ax.set_xlim(a, b)
    ax.set_ylim(c, d)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    handles, labels = ax.get_legend_handles_labels()
    if handles:
        ax.legend(loc="upper left", fontsize=8, framealpha=0.9)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _once(ax, label):
    _, labels = ax.get_legend_handles_labels()
    return label if label not in labels else None


def _active_segments(pts, act):
    segs = []
    cur = []
    for p, ok in zip(pts, act):
        if ok:
            cur.append(p)
        elif cur:
            segs.append(np.array(cur))
            cur = []
    if cur:
        segs.append(np.array(cur))
    return segs


def render_singularity_graph(graph, path, title=None):
    """Node-and-arrow sketch of Gamma(Sigma_z)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    nodes = sorted(graph.singulants)
    xpos = {i: k for k, i in enumerate(nodes)}
    for i in nodes:
        ax.plot([xpos[i]], [0], "o", ms=16, mfc="w", mec="k", zorder=3)
        ax.annotate(f"$\\chi_{{{i}}}$", (xpos[i], 0), ha="center", va="center", zorder=4)
    y_child = -0.6
    for c in graph.children:
        xi = xpos[c.parent]
        xj = xpos.get(c.partner, xi)
        zlab = str(c.z)
        if c.kind == "turning":
            ax.annotate("", xy=(xi, -0.12), xytext=(xj, y_child + 0.08),
                        arrowprops=dict(arrowstyle="->", color="k", lw=1.2))
            ax.plot([xj], [y_child], "s", ms=10, mfc="0.9", mec="k")
            ax.annotate(f"z={zlab}", (xj, y_child - 0.18), ha="center", fontsize=8)
        else:
            xm = (xi + xj) / 2
            ax.plot([xm], [0.6], "D", ms=9, mfc="w", mec="tab:brown")
            ax.annotate(f"virtual z={zlab}", (xm, 0.78), ha="center", fontsize=8,
                        color="tab:brown")
            ax.plot([xi, xm, xj], [0.08, 0.55, 0.08], color="tab:brown", lw=0.8, ls=":")
    ax.set_xlim(-0.7, len(nodes) - 0.3)
    ax.set_ylim(-1.1, 1.1)
    ax.axis("off")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_coefficient_fit(ns, values, model, path, title=None):
    """Large-order diagnostics: |Phi_n| and the fitted model."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(ns, np.abs(values), ".", ms=3, label="|Phi_n|")
    ax.semilogy(ns, np.abs(model), "-", lw=1, label="fit")
    ax.set_xlabel("n")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
