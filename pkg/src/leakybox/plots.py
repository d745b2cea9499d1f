"""Figures written next to the CSV output.

The CSV files stay the data contract; these figures are a convenience view
of the same columns.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
}

# Keeps repeated renders byte-stable.
_PNG_META = {"Software": None}


def plot_run(record, path):
    """Four-panel overview of one evolution: <N>, F, purity/fidelity, phase."""
    a = record.as_arrays()
    jt = record.integrated_rate()
    with plt.rc_context(RC):
        fig, axes = plt.subplots(2, 2, figsize=(7.0, 5.0), sharex=True)
        ax = axes[0, 0]
        ax.plot(jt, a["mean_N"], label="simulated")
        ax.plot(jt, a["mean_N"][0] * np.exp(-jt), "--", label=r"$\langle N_0\rangle e^{-\int j\,dt}$")
        ax.set_ylabel(r"$\langle N\rangle$")
        ax.legend()

        ax = axes[0, 1]
        ax.plot(jt, a["fano"], label="simulated")
        ax.plot(jt, 1.0 + (a["fano"][0] - 1.0) * np.exp(-jt), "--", label="relaxation law")
        ax.set_ylabel("Fano factor")
        ax.legend()

        ax = axes[1, 0]
        ax.plot(jt, a["purity"], label="purity")
        ax.plot(jt, a["fidelity_csib"], label="coherent-state fidelity")
        ax.set_ylabel("purity / fidelity")
        ax.set_xlabel(r"$\int j\,dt$")
        ax.legend()

        ax = axes[1, 1]
        ax.plot(jt, np.unwrap(a["phase"]))
        ax.set_ylabel("fitted phase (rad)")
        ax.set_xlabel(r"$\int j\,dt$")

        fig.tight_layout()
        fig.savefig(path, metadata=_PNG_META)
        plt.close(fig)
    return path


def plot_sweep(rows, axes_names, path, metrics=("final_fano", "final_purity", "fitted_decay_rate")):
    """One panel per metric against the first grid axis; other axes become series."""
    if not rows or not axes_names:
        return None
    x_name = axes_names[0]
    groups = {}
    for row in rows:
        key = tuple(row[a] for a in axes_names[1:])
        groups.setdefault(key, []).append(row)
    with plt.rc_context(RC):
        fig, axs = plt.subplots(1, len(metrics), figsize=(3.0 * len(metrics), 2.8), squeeze=False)
        for ax, metric in zip(axs[0], metrics):
            for key, grp in groups.items():
                label = ", ".join(f"{n}={v:g}" for n, v in zip(axes_names[1:], key)) or None
                ax.plot([r[x_name] for r in grp], [r[metric] for r in grp], "o-", label=label)
            ax.set_xlabel(x_name)
            ax.set_ylabel(metric)
            if len(groups) > 1:
                ax.legend()
        fig.tight_layout()
        fig.savefig(path, metadata=_PNG_META)
        plt.close(fig)
    return path
