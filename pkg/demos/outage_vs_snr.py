"""Outage of the two-hop RIS/UAV relay link against the transmit SNR.

Runs the shipped ``fig1`` sweep (K surfaces of N elements each), then checks
a few points against a short Monte-Carlo run.

    python3 demos/outage_vs_snr.py
"""

# %%
from pathlib import Path

import numpy as np

from risuav.experiment import load_config, run_sweep

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
cfg = load_config(CONFIGS / "fig1.json")

# %% closed-form sweep
result = run_sweep(cfg, with_mc=False)
snr = result.column("sweep_value", result.variants()[0])
print("avg SNR [dB]  " + "  ".join(f"{v:>10s}" for v in result.variants()))
for i, s in enumerate(snr):
    print(f"{s:12.1f}  " + "  ".join(f"{result.column('op', v)[i]:10.3e}" for v in result.variants()))

# %% the diversity order: the outage slope at high SNR tends to -1 decade per decade
for v in result.variants():
    op = result.column("op", v)
    slope = np.polyfit(snr[-3:] / 10, np.log10(op[-3:]), 1)[0]
    print(f"{v:10s} high-SNR slope {slope:+.2f}")

# %% Monte-Carlo spot check with the config's own seed
checked = run_sweep(cfg, threads=4)
for row in checked.rows[::4]:
    print(f"{row['variant']:10s} {row['sweep_value']:5.1f} dB  closed {row['op']:.4e}  "
          f"MC {row['mc_op']:.4e} +- {row['mc_op_se']:.1e}")
