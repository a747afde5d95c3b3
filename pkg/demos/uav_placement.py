"""Where to fly the UAV.

Raising the UAV improves line-of-sight probability but lengthens the link,
so the outage has an interior minimum in height. Along the horizontal
axis the best spot moves towards the destination as the SNR grows.

    python3 demos/uav_placement.py
"""

# %%
from pathlib import Path

import numpy as np

from risuav.experiment import load_config, run_sweep

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

# %% height
heights = run_sweep(load_config(CONFIGS / "fig5.json"))
for v in heights.variants():
    h, op = heights.column("sweep_value", v), heights.column("op", v)
    i = int(np.argmin(op))
    print(f"{v:10s} best height {h[i]:6.1f} m  (OP {op[i]:.3e}, at 5 m {op[0]:.3e}, at 300 m {op[-1]:.3e})")

# %% horizontal position between source (0 m) and destination (100 m)
positions = run_sweep(load_config(CONFIGS / "fig6.json"))
for v in positions.variants():
    x, op = positions.column("sweep_value", v), positions.column("op", v)
    print(f"{v:10s} best position {x[int(np.argmin(op))]:6.1f} m")
