"""Static figures for error tables and chaos-coefficient curves."""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "mcchaos",  # stable element ids across runs
    "svg.fonttype": "path",
}


def golden_size(width: float = 6.0):
    return (width, width * (np.sqrt(5.0) - 1.0) / 2.0)


@contextmanager
def figure_style():
    with plt.rc_context(STYLE):
        yield


def save(fig, path) -> Path:
    path = Path(path)
    # no timestamps, so repeated runs produce identical files
    meta = {"Date": None} if path.suffix in (".svg", ".pdf") else {}
    if path.suffix == ".png":
        meta = {"Software": None}
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_error_convergence(report, path, norm: str = "h1"):
    """Log-log seed-median error against S, one line per n, with the MC baseline."""
    table = report.median_table(norm)
    S = np.array(report.config.sample_counts, dtype=float)
    label = r"$\varepsilon_{H^1}$" if norm == "h1" else r"$\varepsilon_{L^2}$"
    with figure_style():
        fig, ax = plt.subplots(figsize=golden_size(5.0))
        markers = "osD^v<>ph"
        for k, (n, row) in enumerate(table):
            vals = np.array([np.nan if v is None else v for v in row])
            if n == "mc":
                ax.loglog(S, vals, "k--", marker="x", label="Monte Carlo")
            else:
                ax.loglog(S, vals, marker=markers[k % len(markers)], label=f"n = {n}")
        finite = [v for _, row in table for v in row if v]
        if finite and len(S) > 1:
            ref = np.median(finite) * np.sqrt(S[0] / S)
            ax.loglog(S, ref, ":", color="0.5", label=r"$S^{-1/2}$")
        ax.set_xlabel("number of samples S")
        ax.set_ylabel(label)
        ax.set_title(f"{report.config.case}, {report.config.n_elements} elements")
        ax.legend(ncol=2)
        return save(fig, path)


def plot_coefficients(curves, path):
    """Four panels, one per chaos coefficient, each showing every S and the exact curve."""
    n_panels = curves.exact.shape[0]
    with figure_style():
        fig, axes = plt.subplots(2, 2, figsize=(7.0, 5.0), sharex=True)
        x = np.concatenate(([0.0], curves.x, [1.0]))
        cmap = plt.get_cmap("viridis")
        sample_counts = sorted(curves.blocks)
        for j, ax in enumerate(axes.flat[:n_panels]):
            for k, S in enumerate(sample_counts):
                y = np.concatenate(([0.0], curves.blocks[S][j], [0.0]))
                ax.plot(x, y, color=cmap(k / max(1, len(sample_counts) - 1)), label=f"S = {S}")
            ax.plot(x, np.concatenate(([0.0], curves.exact[j], [0.0])), "k--", label="exact")
            ax.set_title(r"coefficient of $He_{%s}$" % ",".join(str(a) for a in curves.indices[j]))
        axes[0, 0].legend()
        for ax in axes[1]:
            ax.set_xlabel("x")
        fig.suptitle(f"{curves.case}: chaos coefficients, degree {curves.degree}, seed {curves.seed}")
        fig.tight_layout()
        return save(fig, path)
