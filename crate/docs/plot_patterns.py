"""Plot a pattern library written by `ris-harmonics pattern`.

    python docs/plot_patterns.py out/pattern/patterns.csv patterns.png
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

src, dst = sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else "patterns.png"
with open(src) as f:
    header = f.readline().strip().split(",")
data = np.loadtxt(src, delimiter=",", skiprows=1)
angles = data[:, 0]
peak = data[:, 1:].max()

fig, ax = plt.subplots(figsize=(9, 4.5))
for col, name in enumerate(header[1:], start=1):
    db = 20 * np.log10(np.maximum(data[:, col] / peak, 1e-6))
    ax.plot(angles, db, lw=0.9, label="n = " + name[1:])
ax.set_xlim(-90, 90)
ax.set_ylim(-40, 1)
ax.set_xlabel("azimuth (deg)")
ax.set_ylabel("field (dB, common peak)")
ax.legend(ncol=6, fontsize=7, loc="lower center")
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(dst, dpi=150)
print(f"wrote {dst}")
