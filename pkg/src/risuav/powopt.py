"""
Transmit-power split between the two hops.

Minimizes the high-SNR outage c1*E_s^(-M/2) + c2/E_u under E_s + E_u = E_T.
With M = sum(a_k) in the hundreds, c1 under- or overflows a double, so the
constants are carried as logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .channel import GammaFit

__all__ = [
    "ObjectiveConstants",
    "PowerSplit",
    "objective_constants",
    "objective",
    "stationarity",
    "split_residual",
    "solve_split",
    "kkt_residual",
    "grid_minimizer",
]

MAX_ITER = 2200


@dataclass(frozen=True)
class ObjectiveConstants:
    """M, log(c1), c2 of the asymptotic outage objective."""

    m_sum: float
    log_c1: float
    c2: float

    def __post_init__(self):
        if not (self.m_sum > 0 and self.c2 > 0 and math.isfinite(self.log_c1)):
            raise ValueError("objective constants must be positive and finite")

    @classmethod
    def from_values(cls, m_sum, c1, c2):
        return cls(m_sum, math.log(c1), c2)

    @property
    def c1(self):
        return math.exp(self.log_c1)

    @property
    def log_d(self):
        """log of d = [2 c2 / (M c1)]^(-1/(M/2+1))."""
        return -(math.log(2.0 * self.c2) - math.log(self.m_sum) - self.log_c1) / (self.m_sum / 2.0 + 1.0)

    @property
    def d(self):
        return math.exp(self.log_d)


@dataclass(frozen=True)
class PowerSplit:
    e_s: float
    e_u: float
    op_asymptotic: float
    iterations: int
    machine_precision: bool = False


def objective_constants(fits: Sequence[GammaFit], k0: float, loss: float, gamma_out: float,
                        n0: float = 1.0, nu: float = 1.0) -> ObjectiveConstants:
    """Collect M, c1, c2 from the channel description (noise powers linear)."""
    m_sum = float(sum(f.a for f in fits))
    log_c1 = 0.5 * m_sum * math.log(n0)
    for f in fits:
        log_c1 += 0.5 * f.a * math.log(gamma_out * f.path_loss / f.b**2) - special.gammaln(f.a)
    c2 = nu * math.exp(-k0) * (1.0 + k0) * gamma_out * loss
    return ObjectiveConstants(m_sum, log_c1, c2)


def objective(consts: ObjectiveConstants, e_s, e_u):
    """Asymptotic outage at powers (e_s, e_u)."""
    e_s = np.asarray(e_s, dtype=float)
    e_u = np.asarray(e_u, dtype=float)
    if np.any(e_s <= 0) or np.any(e_u <= 0):
        raise ValueError("powers must be positive")
    with np.errstate(over="ignore"):
        out = np.exp(consts.log_c1 - 0.5 * consts.m_sum * np.log(e_s)) + consts.c2 / e_u
    return out[()] if out.ndim == 0 else out


def stationarity(consts: ObjectiveConstants, x, e_total):
    """g(x) = x - d (E_T - x)^(4/(M+2)), increasing on (0, E_T)."""
    return _residual(consts, x, e_total - x) if x < e_total else x


def split_residual(consts: ObjectiveConstants, split: PowerSplit) -> float:
    """Stationarity residual evaluated on the (e_s, e_u) pair itself.

    Unlike :func:`stationarity` this does not round E_T - e_s, which matters
    when one power is a tiny fraction of the budget.
    """
    return _residual(consts, split.e_s, split.e_u)


def _residual(consts, e_s, e_u):
    return e_s - math.exp(consts.log_d + 4.0 / (consts.m_sum + 2.0) * math.log(e_u))


def solve_split(consts: ObjectiveConstants, e_total: float, tol: float = 1e-12) -> PowerSplit:
    """Bisection for the root of :func:`stationarity`.

    The search variable is whichever power is smaller at the root, since
    doubles near zero resolve a lopsided split far better than doubles near
    E_T. Stops when |g| <= tol * v for that variable v (hence also
    <= tol * E_T) or the bracket collapses to adjacent doubles (reported
    through ``machine_precision``).
    """
    if not e_total > 0:
        raise ValueError("total power must be positive")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    # g is increasing in e_s; searching over e_u flips the sign
    source_small = stationarity(consts, 0.5 * e_total, e_total) >= 0

    def g(v):
        return _residual(consts, v, e_total - v) if source_small else -_residual(consts, e_total - v, v)

    lo, hi = 0.0, 0.5 * e_total
    best, best_g = hi, abs(g(hi))
    iterations = 0
    at_precision = False
    for iterations in range(1, MAX_ITER + 1):
        v = 0.5 * (lo + hi)
        gv = g(v)
        if abs(gv) < best_g:
            best, best_g = v, abs(gv)
        if best_g <= tol * best:
            break
        if gv > 0:
            hi = v
        else:
            lo = v
        if hi - lo <= 2 * np.spacing(max(hi, np.finfo(float).tiny)):
            at_precision = True
            break
    e_s, e_u = (best, e_total - best) if source_small else (e_total - best, best)
    return PowerSplit(e_s, e_u, float(objective(consts, e_s, e_u)), iterations, at_precision)


def kkt_residual(consts: ObjectiveConstants, split: PowerSplit) -> float:
    """Mismatch of the marginal returns of the two powers, relative to the objective."""
    e_s, e_u = split.e_s, split.e_u
    d_s = -0.5 * consts.m_sum * math.exp(consts.log_c1 - (0.5 * consts.m_sum + 1.0) * math.log(e_s))
    d_u = -consts.c2 / e_u**2
    value = float(objective(consts, e_s, e_u))
    return abs(d_s - d_u) * (e_s + e_u) / value


def grid_minimizer(consts: ObjectiveConstants, e_total: float, points: int = 100_000):
    """Brute-force minimizer of the objective on a uniform grid of E_s."""
    grid = np.linspace(0.0, e_total, points + 1)[1:-1]
    values = objective(consts, grid, e_total - grid)
    i = int(np.argmin(values))
    return grid[i], grid[1] - grid[0]
