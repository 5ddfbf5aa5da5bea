"""Averaged spectrum with the harmonic lines marked, from `ris-harmonics simulate`.

    python docs/plot_spectrum.py out/simulate spectrum.png
"""
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

run = Path(sys.argv[1])
dst = sys.argv[2] if len(sys.argv) > 2 else "spectrum.png"
spec = np.genfromtxt(run / "spectrum.csv", delimiter=",", names=True)
lines = np.genfromtxt(run / "harmonics.csv", delimiter=",", names=True, dtype=None, encoding="utf-8")

fig, ax = plt.subplots(figsize=(9, 4))
ax.semilogy(spec["freq_hz"], spec["magnitude"], lw=0.8, color="0.3")
ax.scatter(lines["freq_hz"], lines["magnitude"], color="C3", s=14, zorder=3)
for row in lines:
    ax.annotate(str(row["n"]), (row["freq_hz"], row["magnitude"]), fontsize=7,
                xytext=(0, 4), textcoords="offset points", ha="center")
ax.set_xlabel("frequency offset (Hz)")
ax.set_ylabel("magnitude")
ax.grid(alpha=0.3, which="both")
fig.tight_layout()
fig.savefig(dst, dpi=150)
print(f"wrote {dst}")
