"""
Monte-Carlo reference for both hops.

Samples are drawn at amplitude level: Nakagami pairs per RIS element for the
ground-to-air hop and a Rician envelope for the air-to-ground hop.

Trials are cut into fixed-size blocks; block ``i`` always draws from
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on how many
worker threads process the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import RisSpec, path_loss
from .metrics import BPSK, Modulation, asep_total, capacity_total
from .snrstats import A2gLink
from .specfun import gaussian_q

__all__ = [
    "McConfig",
    "McEstimate",
    "McScenario",
    "sample_z",
    "sample_g2a",
    "sample_a2g",
    "estimate_metrics",
    "draw",
    "run_mc",
    "run_mc_snr_sweep",
]


@dataclass(frozen=True)
class McConfig:
    trials: int = 1_000_000
    seed: int = 20231
    streams: int = 1
    batch: int = 1 << 16

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if self.streams < 1 or self.batch < 1:
            raise ValueError("streams and batch must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    trials: int


@dataclass(frozen=True)
class McScenario:
    """Everything the sampler needs for one operating point.

    ``path_losses`` are the SNR divisors of each RIS path (same meaning as
    :attr:`GammaFit.path_loss`).
    """

    ris: Sequence[RisSpec]
    path_losses: Sequence[float]
    avg_snr_a: float
    a2g: A2gLink
    gamma_out: float = 1.0
    modulation: Modulation = BPSK

    @classmethod
    def from_specs(cls, ris, wavelength, avg_snr_a, a2g, gamma_out=1.0, modulation=BPSK,
                   reference_loss=1.0):
        losses = [path_loss(s, wavelength) / reference_loss for s in ris]
        return cls(tuple(ris), tuple(losses), avg_snr_a, a2g, gamma_out, modulation)


def _nakagami(rng, m, omega, size):
    return np.sqrt(rng.gamma(m, omega / m, size=size))


def sample_z(spec: RisSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws of Z = sum_i alpha_i beta_i over the RIS elements."""
    shape = (n, spec.n_elements)
    alpha = _nakagami(rng, spec.m1, spec.omega1, shape)
    beta = _nakagami(rng, spec.m2, spec.omega2, shape)
    return np.sum(alpha * beta, axis=1)


def sample_g2a(ris: Sequence[RisSpec], path_losses: Sequence[float], avg_snr: float, n: int,
               rng: np.random.Generator) -> np.ndarray:
    """Selected-RIS SNR samples: max_k (avg_snr / P_L,k) Z_k^2."""
    best = np.zeros(n)
    for spec, loss in zip(ris, path_losses):
        z = sample_z(spec, n, rng)
        np.maximum(best, avg_snr / loss * z * z, out=best)
    return best


def sample_a2g(link: A2gLink, n: int, rng: np.random.Generator) -> np.ndarray:
    """A2G SNR samples from a unit-power Rician envelope."""
    nu = math.sqrt(link.k0 / (1.0 + link.k0))
    sigma = math.sqrt(0.5 / (1.0 + link.k0))
    g = rng.standard_normal((2, n))
    chi2 = (nu + sigma * g[0]) ** 2 + (sigma * g[1]) ** 2
    return chi2 * (link.avg_snr / link.loss)


def _probability(hits, n):
    p = hits / n
    return McEstimate(p, math.sqrt(p * (1.0 - p) / n), n)


def _mean(values):
    n = values.size
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return McEstimate(float(np.mean(values)), std / math.sqrt(n), n)


def estimate_metrics(samples_a, samples_b, gamma_out: float, mod: Modulation = BPSK):
    """Empirical (outage, ASEP, capacity) from paired hop samples."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size == 0 or a.size != b.size:
        raise ValueError("need equal-length, non-empty sample sets")
    n = a.size
    op = _probability(int(np.count_nonzero(np.minimum(a, b) < gamma_out)), n)

    err_a = _mean(mod.p * gaussian_q(np.sqrt(2.0 * mod.q * a)))
    err_b = _mean(mod.p * gaussian_q(np.sqrt(2.0 * mod.q * b)))
    pa, pb = err_a.mean, err_b.mean
    asep = McEstimate(
        asep_total(min(pa, 1.0), min(pb, 1.0)),
        math.hypot((1 - 2 * pb) * err_a.std_error, (1 - 2 * pa) * err_b.std_error),
        n,
    )

    cap_a = _mean(np.log2(1.0 + a))
    cap_b = _mean(np.log2(1.0 + b))
    low = cap_a if cap_a.mean <= cap_b.mean else cap_b
    capacity = McEstimate(capacity_total(cap_a.mean, cap_b.mean), 0.5 * low.std_error, n)
    return op, asep, capacity


def _block_sizes(trials, batch):
    full, rest = divmod(trials, batch)
    return [batch] * full + ([rest] if rest else [])


def _block_generator(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _run_block(scenario: McScenario, seed, index, n):
    rng = _block_generator(seed, index)
    a = sample_g2a(scenario.ris, scenario.path_losses, scenario.avg_snr_a, n, rng)
    b = sample_a2g(scenario.a2g, n, rng)
    return a, b


def draw(scenario: McScenario, config: McConfig):
    """All hop samples for a scenario, concatenated in block order."""
    sizes = _block_sizes(config.trials, config.batch)
    if config.streams == 1:
        parts = [_run_block(scenario, config.seed, i, n) for i, n in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=config.streams) as pool:
            parts = list(pool.map(lambda job: _run_block(scenario, config.seed, *job), enumerate(sizes)))
    a = np.concatenate([p[0] for p in parts])
    b = np.concatenate([p[1] for p in parts])
    return a, b


def run_mc(scenario: McScenario, config: McConfig):
    """Monte-Carlo (outage, ASEP, capacity) estimates for one scenario."""
    a, b = draw(scenario, config)
    return estimate_metrics(a, b, scenario.gamma_out, scenario.modulation)


def run_mc_snr_sweep(scenario: McScenario, avg_snrs_a, avg_snrs_b, config: McConfig):
    """Estimates along an SNR sweep, reusing one set of fading draws.

    Both hop SNRs scale linearly with their average SNR, so samples drawn at
    the scenario's own SNRs are rescaled point by point.
    """
    a, b = draw(scenario, config)
    out = []
    for snr_a, snr_b in zip(avg_snrs_a, avg_snrs_b):
        out.append(estimate_metrics(a * (snr_a / scenario.avg_snr_a), b * (snr_b / scenario.a2g.avg_snr),
                                    scenario.gamma_out, scenario.modulation))
    return out
