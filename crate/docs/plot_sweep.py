"""Error distribution per angle and SNR from `ris-harmonics sweep`.

    python docs/plot_sweep.py out/desk_sweep/sweep.csv sweep.png
"""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

src, dst = sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else "sweep.png"
errors = defaultdict(lambda: defaultdict(list))
with open(src) as f:
    for row in csv.DictReader(f):
        if row["status"] != "ok":
            continue
        snr = row["snr_db"] or "noiseless"
        errors[snr][float(row["true_deg"])].append(float(row["err_deg"]))

fig, ax = plt.subplots(figsize=(9, 4))
for snr, by_angle in errors.items():
    angles = sorted(by_angle)
    med = [np.median(np.abs(by_angle[a])) for a in angles]
    p90 = [np.percentile(np.abs(by_angle[a]), 90) for a in angles]
    line, = ax.plot(angles, med, marker="o", ms=3, label=f"{snr} dB median")
    ax.plot(angles, p90, ls="--", color=line.get_color(), lw=0.8)
ax.set_xlabel("true angle (deg)")
ax.set_ylabel("|error| (deg), dashed = p90")
ax.legend(fontsize=8)
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(dst, dpi=150)
print(f"wrote {dst}")
