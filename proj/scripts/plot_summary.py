#!/usr/bin/env python3
"""Plot a run's summary file: empirical risk against the closed forms.

Example only; not part of the tested tool.

    collapse run --config configs/gaussian1d.yaml
    python3 scripts/plot_summary.py out/gaussian1d/gaussian1d_summary.csv
"""
import sys

import matplotlib.pyplot as plt
import pandas as pd


def main(path):
    s = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    se = (s["risk_variance"] / s["replicates"]).pow(0.5)
    ax.plot(s["generation"], s["risk_mean"], label="mean risk")
    ax.fill_between(s["generation"], s["risk_mean"] - 2 * se, s["risk_mean"] + 2 * se, alpha=0.3)
    if s["predicted_risk_mean"].notna().any():
        ax.plot(s["generation"], s["predicted_risk_mean"], "--", label="closed form")
    if s["risk_lower_bound"].notna().any():
        ax.plot(s["generation"], s["risk_lower_bound"], ":", label="lower bound")
    ax.set_xlabel("generation")
    ax.set_ylabel("risk")
    ax.legend()
    out = path.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=120, bbox_inches="tight")
    print(out)


if __name__ == "__main__":
    main(sys.argv[1])
