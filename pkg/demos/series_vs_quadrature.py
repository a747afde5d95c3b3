"""Truncated series against adaptive quadrature.

The alternating series for the hop-1 metrics converge only while the
per-surface scale stays moderate. Outside that domain they raise
``ConvergenceError`` and the ``series`` route falls back to quadrature with
a warning.

    python3 demos/series_vs_quadrature.py
"""

# %%
import warnings
from pathlib import Path

import numpy as np

from risuav import metrics
from risuav.experiment import derive, load_config
from risuav.specfun import ConvergenceError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
cfg = load_config(CONFIGS / "fig3.json")

# %%
for snr_db in np.arange(-10.0, 31.0, 5.0):
    link_a, link_b = derive(cfg, {"n_ris": 2, "avg_snr_db": snr_db}).links()
    quad = metrics.asep_hop_a(link_a)
    try:
        series = f"{metrics.asep_hop_a_series(link_a, metrics.BPSK):.10f}"
    except ConvergenceError as exc:
        series = f"refused ({exc})"
    print(f"{snr_db:6.1f} dB  quadrature {quad:.10f}  series {series}")

# %% the hop-2 closed form stays accurate over the whole range
for snr_db in (-30.0, 0.0, 30.0, 60.0):
    _, link_b = derive(cfg, {"avg_snr_db": snr_db}).links()
    closed = metrics.asep_hop_b(link_b)
    quad = metrics.asep_hop_b(link_b, route="quadrature")
    print(f"{snr_db:6.1f} dB  hop-2 closed {closed:.12e}  quadrature {quad:.12e}")

# %% the fallback route
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    link_a, _ = derive(cfg, {"n_ris": 1, "avg_snr_db": 20.0}).links()
    metrics.asep_hop_a(link_a, route="series")
print(f"{len(caught)} fallback warning(s)")
