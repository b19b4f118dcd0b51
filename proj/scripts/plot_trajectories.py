#!/usr/bin/env python3
"""Plot per-replicate risk on a log scale, e.g. for the GMM runs.

    collapse run --config configs/gmm.yaml
    python3 scripts/plot_trajectories.py out/gmm/gmm_trajectories.csv
"""
import sys

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def main(path):
    t = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for rep, g in t.groupby("replicate"):
        ax.plot(g["generation"], np.log(g["risk"].clip(lower=1e-300)), lw=0.8, label=f"replicate {rep}")
    ax.set_xlabel("generation")
    ax.set_ylabel("log risk")
    if t["replicate"].nunique() <= 10:
        ax.legend()
    out = path.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=120, bbox_inches="tight")
    print(out)


if __name__ == "__main__":
    main(sys.argv[1])
