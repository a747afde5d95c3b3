"""
Distributions of the two hop SNRs.

G2A: the best of K RIS paths, each gamma_k = (gbar_a / P_L,k) * Z_k**2 with
Z_k ~ Gamma(a_k, b_k).  A2G: a Rician power gain scaled by gbar_b / L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .channel import GammaFit
from .specfun import (
    DEFAULT_SERIES,
    ConvergenceError,
    bessel_i0,
    marcum_q1_complement,
    series_usable,
)

__all__ = [
    "G2aLink",
    "A2gLink",
    "g2a_cdf",
    "g2a_pdf",
    "g2a_cdf_series",
    "g2a_scale",
    "a2g_cdf",
    "a2g_pdf",
    "series_coefficients",
]


@dataclass(frozen=True)
class G2aLink:
    fits: Sequence[GammaFit]
    avg_snr: float

    def __post_init__(self):
        object.__setattr__(self, "fits", tuple(self.fits))
        if not self.fits:
            raise ValueError("G2A link needs at least one RIS")
        if not self.avg_snr > 0:
            raise ValueError("average SNR must be positive")

    @property
    def shapes(self):
        return np.array([f.a for f in self.fits])

    @property
    def rates(self):
        """c_k with Z_k/b_k = c_k * sqrt(gamma): c_k = sqrt(P_L,k / (gbar b_k^2))."""
        return np.array([math.sqrt(f.path_loss / self.avg_snr) / f.b for f in self.fits])

    def with_snr(self, avg_snr):
        return G2aLink(self.fits, avg_snr)


@dataclass(frozen=True)
class A2gLink:
    k0: float
    loss: float
    avg_snr: float

    def __post_init__(self):
        if not (self.k0 >= 0 and self.loss > 0 and self.avg_snr > 0):
            raise ValueError("A2G link parameters must be positive")

    @property
    def rate(self):
        """(1 + K0) L / gbar_b, the inverse mean of the scattered part."""
        return (1.0 + self.k0) * self.loss / self.avg_snr

    def with_snr(self, avg_snr):
        return A2gLink(self.k0, self.loss, avg_snr)


def g2a_scale(link: G2aLink) -> float:
    """A representative SNR of hop 1 (the largest per-RIS mean)."""
    return max(f.a * (f.a + 1) * f.b**2 * link.avg_snr / f.path_loss for f in link.fits)


def g2a_cdf(link: G2aLink, gamma):
    """CDF of the selected-RIS SNR: product of per-RIS Gamma CDFs in sqrt(gamma)."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    root = np.sqrt(g)
    out = np.ones_like(root)
    for a, c in zip(link.shapes, link.rates):
        out = out * special.gammainc(a, c * root)
    return out[()] if out.ndim == 0 else out


def g2a_pdf(link: G2aLink, gamma):
    """Density of the selected-RIS SNR (product-rule derivative of the CDF)."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise ValueError("SNR must be positive for the density")
    root = np.sqrt(g)
    cdfs = []
    pdfs = []
    for a, c in zip(link.shapes, link.rates):
        x = c * root
        cdfs.append(special.gammainc(a, x))
        # d/dgamma P(a, c sqrt(g)) = x^(a-1) e^-x / Gamma(a) * c / (2 sqrt(g))
        log_dens = (a - 1) * np.log(x) - x - special.gammaln(a)
        pdfs.append(np.exp(log_dens) * c / (2.0 * root))
    out = np.zeros_like(root)
    for j in range(len(cdfs)):
        term = pdfs[j]
        for k in range(len(cdfs)):
            if k != j:
                term = term * cdfs[k]
        out = out + term
    return out[()] if out.ndim == 0 else out


def series_coefficients(link: G2aLink, n_terms: int):
    """Combined coefficients of the K-fold product of alternating series.

    Returns (log_lead, A, coef) such that
        F(gamma) = exp(log_lead) * sum_n coef[n] * gamma**((A + n)/2)
    where A = sum a_k and coef is the Cauchy product over RISs of
    (-c_k)^n / (n! (a_k + n)).
    """
    shapes = link.shapes
    rates = link.rates
    log_lead = float(np.sum(shapes * np.log(rates) - special.gammaln(shapes)))
    coef = np.zeros(n_terms)
    coef[0] = 1.0
    n = np.arange(n_terms)
    for i, (a, c) in enumerate(zip(shapes, rates)):
        log_mag = n * math.log(c) - special.gammaln(n + 1.0) - np.log(a + n)
        seq = np.where(n % 2 == 0, 1.0, -1.0) * np.exp(log_mag)
        coef = seq.copy() if i == 0 else np.convolve(coef, seq)[:n_terms]
    return log_lead, float(np.sum(shapes)), coef


def g2a_cdf_series(link: G2aLink, gamma: float, ctl=DEFAULT_SERIES) -> float:
    """Literal truncated alternating-series form of the G2A CDF.

    Only usable while c_k*sqrt(gamma) stays moderate; raises
    ConvergenceError when cancellation would swamp the result.
    """
    if gamma == 0:
        return 0.0
    n_terms = min(ctl.max_terms, 400)
    log_lead, total_shape, coef = series_coefficients(link, n_terms)
    root = math.sqrt(gamma)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = coef * np.exp(np.arange(n_terms) * math.log(root))
        total = float(np.sum(terms))
    live = np.flatnonzero(coef)
    # coefficients that underflowed to zero say nothing about the tail
    if live.size == 0 or not series_usable(terms[: live[-1] + 1], total, ctl):
        raise ConvergenceError("CDF series lost precision", total, n_terms)
    return math.exp(log_lead + total_shape * math.log(root)) * total


def a2g_cdf(link: A2gLink, gamma):
    """CDF of the A2G SNR: 1 - Q1(sqrt(2 K0), sqrt(2 gamma L (1+K0)/gbar_b))."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    out = marcum_q1_complement(math.sqrt(2.0 * link.k0), np.sqrt(2.0 * link.rate * g))
    return out[()] if np.ndim(out) == 0 else out


def a2g_pdf(link: A2gLink, gamma):
    """Noncentral-chi-square density of the A2G SNR."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise ValueError("SNR must be positive for the density")
    k0, rate = link.k0, link.rate
    arg = 2.0 * np.sqrt(k0 * rate * g)
    # exp(-K0 - rate g) I0(arg) = exp(arg - K0 - rate g) * i0e(arg)
    out = rate * np.exp(arg - k0 - rate * g) * bessel_i0(arg, scaled=True)
    return out[()] if out.ndim == 0 else out
