"""How the limiting support splits as the aspect ratio falls.

A single signal atom at b = 5 over unit noise: above the critical ratio the
spectrum is one blob; below it a gap opens between noise and signal
components, and the gap keeps widening as y -> 0.
"""

import numpy as np
import matplotlib.pyplot as plt

from specsplit import (NoiseSignalModel, canonical_endpoints, critical_y,
                       find_support_layout, limiting_density)

MODEL = NoiseSignalModel(1.0, 0.1, ((5.0, 1.0),))


def main():
    crit = critical_y(MODEL)
    print(f"model: 10% of population at b=5 over unit noise")
    print(f"critical aspect ratio: {crit:.6f}")

    ratios = [1.6 * crit, 0.9 * crit, 0.25 * crit, 0.05 * crit]
    fig, axes = plt.subplots(len(ratios), 1, figsize=(7, 9), sharex=True)
    for ax, y in zip(axes, ratios):
        lay = find_support_layout(y, MODEL)
        tag = "merged" if lay.n_components == 1 else "split"
        print(f"  y = {y:.4f} ({y / crit:.2f} x critical): {tag}, "
              + ", ".join(f"[{iv.lo:.3f}, {iv.hi:.3f}] mass {iv.mass:.3f}"
                          for iv in lay.intervals))
        for iv in lay.intervals:
            grid = np.linspace(iv.lo + 1e-4, iv.hi - 1e-4, 300)
            ax.fill_between(grid, limiting_density(grid, y, MODEL), alpha=0.6)
        ax.set_ylabel(f"y = {y:.3f}\n({tag})", rotation=0, ha="right",
                      va="center", fontsize=9)
        ax.set_yticks([])
    axes[-1].set_xlabel("eigenvalue")
    fig.suptitle("limiting density while y decreases through the threshold")
    fig.tight_layout()
    fig.savefig("support_splitting.png", dpi=120)
    print("wrote support_splitting.png")

    print("endpoint trend toward (1, 1, 5, 5):")
    for y in (0.1, 0.01, 0.001):
        x1, x2, x3, x4 = canonical_endpoints(find_support_layout(y, MODEL))
        print(f"  y = {y:<6g} x = ({x1:.4f}, {x2:.4f}, {x3:.4f}, {x4:.4f})")


if __name__ == "__main__":
    main()
