"""Splitting a power budget between the source and the UAV.

The optimizer minimizes the high-SNR outage over E_s + E_u = E_T; the
exact outage at the optimum is compared with an equal split.

    python3 demos/power_split.py
"""

# %%
from pathlib import Path

from risuav.experiment import load_config, run_optimize

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
result = run_optimize(load_config(CONFIGS / "fig7.json"))

# %%
print(" E_T [dB]   E_s [dB]   E_u [dB]  UAV share   OP optimal   OP equal")
for row in result.rows:
    print(f"{row['sweep_value']:9.1f} {row['e_s_db']:10.2f} {row['e_u_db']:10.2f} {row['e_u_share']:10.4f}"
          f" {row['op']:12.3e} {row['op_equal_split']:10.3e}")

# %% the surfaces supply large array gain, so the UAV takes most of the budget
# once the total power is high
