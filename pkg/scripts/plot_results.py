"""Plot CSV outputs of the other scripts (needs the ``plot`` extra).

    python3 scripts/plot_results.py results/fast        # h and u_m at t_end, profiles
    python3 scripts/plot_results.py results/hyperbolicity
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sswme.cli import RunManifest, read_csv


def plot_runs(root: Path):
    runs = [p for p in sorted(root.iterdir()) if (p / "manifest").exists()]
    fig, ax = plt.subplots(1, 2, figsize=(10, 4))
    for run in runs:
        last = sorted(run.glob("fields_t*.csv"))[-1]
        header, data = read_csv(last)
        ax[0].plot(data[:, 0], data[:, 1], label=run.name)
        ax[1].plot(data[:, 0], data[:, 2], label=run.name)
    ax[0].set_ylabel("h")
    ax[1].set_ylabel("u_m")
    for a in ax:
        a.set_xlabel("x")
        a.legend()
    fig.savefig(root / "fields.png", dpi=120)

    prof = [run for run in runs if (run / "profiles" / "profiles.csv").exists()]
    if prof:
        _, first = read_csv(prof[0] / "profiles" / "profiles.csv")
        fig, ax = plt.subplots(1, first.shape[1] - 1, figsize=(10, 4), squeeze=False)
        for run in prof:
            header, d = read_csv(run / "profiles" / "profiles.csv")
            for k in range(1, d.shape[1]):
                ax[0, k - 1].plot(d[:, k], d[:, 0], label=run.name)
                ax[0, k - 1].set_title(header[k])
        for a in ax[0]:
            a.set_xlabel("u")
            a.set_ylabel("zeta")
            a.legend()
        fig.savefig(root / "profiles.png", dpi=120)


def plot_scans(root: Path):
    for run in sorted(p for p in root.iterdir() if (p / "scan.csv").exists()):
        man = RunManifest.read(run)
        n = man.grid["resolution"]
        header, d = read_csv(run / "scan.csv")
        a, b = d[:, 0].reshape(n, n), d[:, 1].reshape(n, n)
        hyp = d[:, header.index("hyperbolic")].reshape(n, n)
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.pcolormesh(a, b, hyp, shading="auto", cmap="viridis_r")
        ax.set_title(run.name)
        fig.savefig(run / "scan.png", dpi=120)


if __name__ == "__main__":
    root = Path(sys.argv[1])
    if any(root.glob("*/scan.csv")):
        plot_scans(root)
    else:
        plot_runs(root)
