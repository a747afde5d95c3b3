"""
Outage probability, average symbol error probability and ergodic capacity.

User-facing values come from stable routes (closed CDFs plus adaptive
quadrature).  The literal alternating-series forms are kept as separate
evaluators that raise :class:`ConvergenceError` once cancellation would make
them unreliable; ``route="series"`` falls back to quadrature with a warning.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .snrstats import (
    A2gLink,
    G2aLink,
    a2g_cdf,
    g2a_cdf,
    g2a_scale,
    series_coefficients,
)
from .specfun import (
    DEFAULT_SERIES,
    ConvergenceError,
    INTEGER_GUARD,
    SeriesControl,
    humbert_phi1,
    hyp1f1,
    hyp2f1_ratio,
    laguerre_sequence,
    marcum_q1,
    quad,
    series_usable,
    split_series_integral,
)

__all__ = [
    "Modulation",
    "BPSK",
    "mpsk",
    "MetricPoint",
    "SeriesFallbackWarning",
    "g2a_sf",
    "a2g_sf",
    "outage_hop",
    "outage_total",
    "outage_asymptotic",
    "asep_from_cdf",
    "asep_hop_a",
    "asep_hop_a_series",
    "asep_hop_b",
    "asep_total",
    "capacity_from_sf",
    "capacity_hop_a",
    "capacity_hop_a_series",
    "capacity_hop_b",
    "capacity_hop_b_series",
    "capacity_total",
    "appendix_a_identity",
    "evaluate_point",
]

LN2 = math.log(2.0)


class SeriesFallbackWarning(RuntimeWarning):
    """A literal series was abandoned in favour of quadrature."""


@dataclass(frozen=True)
class Modulation:
    """ASEP of the form E[p Q(sqrt(2 q gamma))]."""

    p: float
    q: float
    label: str = ""

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValueError("modulation constants must be positive")


BPSK = Modulation(1.0, 1.0, "BPSK")


def mpsk(order, convention="standard"):
    """M-PSK preset.

    ``standard`` uses q = sin^2(pi/M); ``literal`` uses q = sin(2 pi/M).
    """
    if order < 2:
        raise ValueError("PSK order must be >= 2")
    if order == 2:
        return BPSK
    if convention == "standard":
        q = math.sin(math.pi / order) ** 2
    elif convention == "literal":
        q = math.sin(2 * math.pi / order)
    else:
        raise ValueError(f"unknown PSK convention {convention!r}")
    return Modulation(2.0, q, f"{order}-PSK")


@dataclass
class MetricPoint:
    avg_snr_a: float
    avg_snr_b: float
    op_a: float
    op_b: float
    op: float
    op_asymptotic: float
    asep_a: float
    asep_b: float
    asep: float
    capacity_a: float
    capacity_b: float
    capacity: float
    flags: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# survival functions


def g2a_sf(link: G2aLink, gamma):
    """1 - F_a(gamma), accurate when the CDF is close to one."""
    root = np.sqrt(np.asarray(gamma, dtype=float))
    log_cdf = np.zeros_like(root)
    with np.errstate(divide="ignore"):
        for a, c in zip(link.shapes, link.rates):
            log_cdf = log_cdf + np.log1p(-special.gammaincc(a, c * root))
    out = -np.expm1(log_cdf)
    return out[()] if out.ndim == 0 else out


def a2g_sf(link: A2gLink, gamma):
    """1 - F_b(gamma), the Marcum Q tail."""
    out = marcum_q1(math.sqrt(2.0 * link.k0), np.sqrt(2.0 * link.rate * np.asarray(gamma, dtype=float)))
    return out[()] if np.ndim(out) == 0 else out


def _cdf_of(link):
    if isinstance(link, G2aLink):
        return lambda g: g2a_cdf(link, g)
    if isinstance(link, A2gLink):
        return lambda g: a2g_cdf(link, g)
    if callable(link):
        return link
    raise TypeError(f"cannot build a CDF from {type(link).__name__}")


def _sf_of(link):
    if isinstance(link, G2aLink):
        return lambda g: g2a_sf(link, g)
    if isinstance(link, A2gLink):
        return lambda g: a2g_sf(link, g)
    cdf = _cdf_of(link)
    return lambda g: 1.0 - cdf(g)


def _scale_of(link):
    if isinstance(link, G2aLink):
        return g2a_scale(link)
    if isinstance(link, A2gLink):
        return 1.0 / link.rate
    return 1.0


# --------------------------------------------------------------------------
# outage


def outage_hop(link, gamma_out):
    """Outage of one hop: its SNR CDF at the threshold."""
    if not gamma_out > 0:
        raise ValueError("outage threshold must be positive")
    return float(_cdf_of(link)(gamma_out))


def outage_total(p_a, p_b):
    """Outage of the decode-and-forward pair: either hop failing."""
    _check_probability(p_a, p_b)
    return p_a + p_b - p_a * p_b


def outage_asymptotic(link_a: G2aLink, link_b: A2gLink, gamma_out: float) -> float:
    """High-SNR outage: leading term of each hop, added."""
    if not gamma_out > 0:
        raise ValueError("outage threshold must be positive")
    log_first = 0.0
    for f in link_a.fits:
        log_first += 0.5 * f.a * math.log(gamma_out * f.path_loss / (f.b**2 * link_a.avg_snr))
        log_first -= special.gammaln(f.a)
    second = math.exp(-link_b.k0) * (1.0 + link_b.k0) * gamma_out * link_b.loss / link_b.avg_snr
    return math.exp(log_first) + second


def _check_probability(*ps):
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability out of range: {p!r}")


# --------------------------------------------------------------------------
# ASEP


def asep_from_cdf(cdf, mod: Modulation, scale=1.0):
    """E[p Q(sqrt(2 q gamma))] from a CDF, integrating by parts.

    With gamma = t^2 the integrand p sqrt(q/pi) exp(-q t^2) F(t^2) is smooth.
    """
    t_max = math.sqrt(745.0 / mod.q)
    points = [math.sqrt(s) for s in (scale * 1e-2, scale * 0.1, scale, 10 * scale) if s > 0]

    def f(t):
        return math.exp(-mod.q * t * t) * float(cdf(t * t))

    value = quad(f, 0.0, t_max, points=points, epsabs=0.0)
    return mod.p * math.sqrt(mod.q / math.pi) * value


def asep_hop_a_series(link: G2aLink, mod: Modulation, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """Term-by-term integrated alternating series of the hop-1 ASEP."""
    n_terms = min(ctl.max_terms, 2000)
    log_lead, total_shape, coef = series_coefficients(link, n_terms)
    s = (total_shape + np.arange(n_terms)) / 2.0 + 0.5
    log_weight = special.gammaln(s) - s * math.log(mod.q)
    # shift magnitudes into range before exponentiating
    live = coef != 0.0
    log_mag = np.full(n_terms, -np.inf)
    log_mag[live] = log_weight[live] + np.log(np.abs(coef[live]))
    shift = float(np.max(log_mag))
    terms = np.sign(coef) * np.exp(log_mag - shift)
    total = float(np.sum(terms))
    # coefficients that underflowed to zero say nothing about the tail
    tail = int(np.flatnonzero(live)[-1]) + 1
    if not series_usable(terms[:tail], total, ctl):
        raise ConvergenceError("ASEP series lost precision", total, n_terms)
    log_scale = log_lead + shift + math.log(mod.p * math.sqrt(mod.q) / (2.0 * math.sqrt(math.pi)))
    if log_scale > 700.0:
        raise ConvergenceError("ASEP series prefactor overflows", total, n_terms)
    return math.exp(log_scale) * total


def _with_fallback(series, fallback, what):
    try:
        return series()
    except (ConvergenceError, OverflowError, ValueError) as exc:
        warnings.warn(f"{what}: series unusable ({exc}); using quadrature", SeriesFallbackWarning, stacklevel=3)
        return fallback()


def asep_hop_a(link: G2aLink, mod: Modulation = BPSK, ctl: SeriesControl = DEFAULT_SERIES,
               route: str = "quadrature") -> float:
    """Hop-1 ASEP; ``route`` is ``"quadrature"`` (default) or ``"series"``."""

    def by_quad():
        return asep_from_cdf(lambda g: g2a_cdf(link, g), mod, g2a_scale(link))

    if route == "quadrature":
        return by_quad()
    if route == "series":
        return _with_fallback(lambda: asep_hop_a_series(link, mod, ctl), by_quad, "hop-1 ASEP")
    raise ValueError(f"unknown route {route!r}")


def asep_hop_b(link: A2gLink, mod: Modulation = BPSK, route: str = "closed") -> float:
    """Hop-2 ASEP.

    ``closed`` evaluates the Humbert-Phi1 expression with Phi1 - 1F1 merged
    into a single Euler integral, which stays accurate at both SNR extremes;
    ``phi1-literal`` subtracts the two functions as written; ``quadrature``
    integrates the CDF.
    """
    if route == "quadrature":
        return asep_from_cdf(lambda g: a2g_cdf(link, g), mod, 1.0 / link.rate)
    k0 = link.k0
    snr = link.avg_snr / link.loss
    denom = mod.q * snr + k0 + 1.0
    x = (k0 + 1.0) / denom
    y = k0 * (k0 + 1.0) / denom
    if route == "phi1-literal":
        bracket = humbert_phi1(0.5, 1.0, 1.0, x, y) - hyp1f1(0.5, 1.0, y)
        return mod.p * math.sqrt(mod.q) / 2.0 * math.sqrt(snr / denom) * math.exp(-k0) * bracket
    if route != "closed":
        raise ValueError(f"unknown route {route!r}")
    # Phi1 - 1F1 = (2/pi) int_0^{pi/2} x s e^{ys} / (1 - x s) dtheta with s = sin^2(theta);
    # tan(theta) = tan(phi)/sqrt(eps), eps = 1 - x, absorbs the 1/(1 - x s) peak.
    eps = mod.q * snr / denom

    def f(phi):
        sin2 = math.sin(phi) ** 2
        s = sin2 / (sin2 + eps * math.cos(phi) ** 2)
        return s * math.exp(y * s - k0)

    # s dips to 0 over tan(phi) ~ sqrt(eps); mark that scale for the integrator
    root = math.sqrt(eps)
    points = [math.atan(root), math.atan(10.0 * root)]
    return mod.p / math.pi * x * quad(f, 0.0, math.pi / 2, points=points)


def asep_total(p_a, p_b):
    """End-to-end symbol error of decode-and-forward: an error on exactly one hop."""
    _check_probability(p_a, p_b)
    return p_a + p_b - 2.0 * p_a * p_b


# --------------------------------------------------------------------------
# capacity


def capacity_from_sf(sf, upper, scale=1.0):
    """(1/ln 2) * int_0^upper sf(g)/(1+g) dg in bits/s/Hz.

    The part above ``lo`` is integrated in log(g) so that a distribution
    living around ``scale`` is resolved whatever the upper limit.
    """
    if not upper > 0:
        return 0.0
    lo = min(upper, 1e-3 * min(scale, 1.0))
    head = quad(lambda g: float(sf(g)) / (1.0 + g), 0.0, lo)
    if upper <= lo:
        return head / LN2
    u_lo, u_hi = math.log(lo), math.log(upper)
    centre = math.log(scale)
    points = [centre + d for d in (-4.6, -2.3, 0.0, 2.3, 4.6)]

    def f(u):
        g = math.exp(u)
        return float(sf(g)) * g / (1.0 + g)

    tail = quad(f, u_lo, u_hi, points=points)
    return (head + tail) / LN2


def _upper_limit(avg_snr, upper):
    return avg_snr**2 if upper is None else upper


def capacity_hop_a(link: G2aLink, ctl: SeriesControl = DEFAULT_SERIES, upper=None,
                   route: str = "quadrature") -> float:
    """Hop-1 average capacity integrated up to ``upper`` (default gbar_a**2).

    ``route`` may be ``"hyp2f1"`` (hypergeometric series) or ``"split"``
    (split series with the csc constant); both fall back to quadrature.
    """
    u = _upper_limit(link.avg_snr, upper)

    def by_quad():
        return capacity_from_sf(lambda g: g2a_sf(link, g), u, g2a_scale(link))

    if route == "quadrature":
        return by_quad()
    if route in ("hyp2f1", "split"):
        return _with_fallback(lambda: capacity_hop_a_series(link, ctl, u, route), by_quad, "hop-1 capacity")
    raise ValueError(f"unknown route {route!r}")


def capacity_hop_a_series(link: G2aLink, ctl: SeriesControl = DEFAULT_SERIES, upper=None,
                          route: str = "hyp2f1") -> float:
    """Series form of the hop-1 capacity.

    Integrates the CDF series term by term: each power gamma^r contributes
    int_0^U gamma^r/(1+gamma), evaluated by :func:`hyp2f1_ratio`
    (``"hyp2f1"``) or by the split series with -pi*csc(pi r)
    (``"split"``, only when sum(a_k) is not an integer and U > 1).
    """
    u = _upper_limit(link.avg_snr, upper)
    n_terms = min(ctl.max_terms, 400)
    log_lead, total_shape, coef = series_coefficients(link, n_terms)
    use_split = route == "split" and u > 1 and abs(total_shape - round(total_shape)) >= INTEGER_GUARD
    terms = np.zeros(n_terms)
    for n in range(n_terms):
        if coef[n] == 0.0:
            continue
        r = (total_shape + n) / 2.0
        # half-integer r can be integer: those terms go through the hypergeometric route
        if use_split and abs(r - round(r)) >= INTEGER_GUARD:
            integral = split_series_integral(r, u, ctl)
        else:
            integral = hyp2f1_ratio(r + 1.0, u, ctl)
        terms[n] = coef[n] * integral * math.exp(log_lead)
        if n > 4 and ctl.small(terms[n], np.sum(terms[: n + 1])) and abs(terms[n]) < abs(terms[n - 1]):
            terms = terms[: n + 1]
            break
    else:
        raise ConvergenceError("capacity series did not converge", float(np.sum(terms)), n_terms)
    total = float(np.sum(terms))
    if not series_usable(terms, total, ctl):
        raise ConvergenceError("capacity series lost precision", total, len(terms))
    return (math.log1p(u) - total) / LN2


def capacity_hop_b(link: A2gLink, ctl: SeriesControl = DEFAULT_SERIES, upper=None,
                   route: str = "quadrature") -> float:
    """Hop-2 average capacity up to ``upper`` (default gbar_b**2)."""
    u = _upper_limit(link.avg_snr, upper)

    def by_quad():
        return capacity_from_sf(lambda g: a2g_sf(link, g), u, 1.0 / link.rate)

    if route == "quadrature":
        return by_quad()
    if route == "series":
        return _with_fallback(lambda: capacity_hop_b_series(link, ctl, u), by_quad, "hop-2 capacity")
    raise ValueError(f"unknown route {route!r}")


def capacity_hop_b_series(link: A2gLink, ctl: SeriesControl = DEFAULT_SERIES, upper=None) -> float:
    """Laguerre-series form of the hop-2 capacity.

    ln2*C = ln(1+U)*R + e^-K0 sum_k sum_{i=1}^{k+1} L_k(K0) beta^(k+1) (-1)^i U^i / ((k+1)! i)
    with beta = (1+K0) L / gbar_b and R = 1 + e^-K0 sum_k L_k(K0) beta^(k+1)/(k+1)!.
    """
    u = _upper_limit(link.avg_snr, upper)
    k0, beta = link.k0, link.rate
    n_terms = ctl.max_terms
    lag = laguerre_sequence(n_terms - 1, 0.0, k0)
    log_u = math.log(u)
    log1p_u = math.log1p(u)
    pieces = []
    r_sum = 0.0
    total = 0.0
    converged = False
    for k in range(n_terms):
        log_c = -k0 + (k + 1) * math.log(beta) - special.gammaln(k + 2.0)
        i = np.arange(1, k + 2)
        with np.errstate(over="ignore", invalid="ignore"):
            inner = np.where(i % 2 == 0, 1.0, -1.0) * np.exp(log_c + i * log_u - np.log(i)) * lag[k]
        if not np.all(np.isfinite(inner)):
            raise ConvergenceError("hop-2 capacity series overflowed", total, k)
        head = lag[k] * math.exp(log_c)
        r_sum += head
        block = head * log1p_u + float(np.sum(inner))
        pieces.append(head * log1p_u)
        pieces.extend(inner)
        total += block
        # blocks decay like (beta*U)^k/k! once k exceeds beta*U
        if k > beta * u and k > 4 and ctl.small(block, total + log1p_u):
            converged = True
            break
    value = log1p_u + total
    if not converged or not series_usable([log1p_u] + pieces, value, ctl):
        raise ConvergenceError("hop-2 capacity series lost precision", value, len(pieces))
    return value / LN2


def capacity_total(c_a, c_b):
    """System capacity of the half-duplex two-hop link."""
    if c_a < 0 or c_b < 0:
        raise ValueError("capacities must be non-negative")
    return 0.5 * min(c_a, c_b)


def appendix_a_identity(r: float, t: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    r"""\int_0^t x^r/(1+x) dx = sum_k (-1)^k t^(r-k)/(r-k) - pi csc(pi r), t > 1."""
    if abs(r - round(r)) < INTEGER_GUARD:
        raise ValueError(f"r={r!r} is within {INTEGER_GUARD} of an integer")
    if not t > 1:
        raise ValueError("t must exceed 1")
    return split_series_integral(r, t, ctl)


# --------------------------------------------------------------------------


def evaluate_point(link_a: G2aLink, link_b: A2gLink, gamma_out: float, mod: Modulation = BPSK,
                   ctl: SeriesControl = DEFAULT_SERIES, upper_factor: float = 1.0) -> MetricPoint:
    """All closed-form metrics for one operating point."""
    op_a = outage_hop(link_a, gamma_out)
    op_b = outage_hop(link_b, gamma_out)
    asep_a = asep_hop_a(link_a, mod, ctl)
    asep_b = asep_hop_b(link_b, mod)
    cap_a = capacity_hop_a(link_a, ctl, upper=upper_factor * link_a.avg_snr**2)
    cap_b = capacity_hop_b(link_b, ctl, upper=upper_factor * link_b.avg_snr**2)
    return MetricPoint(
        avg_snr_a=link_a.avg_snr,
        avg_snr_b=link_b.avg_snr,
        op_a=op_a,
        op_b=op_b,
        op=outage_total(op_a, op_b),
        op_asymptotic=outage_asymptotic(link_a, link_b, gamma_out),
        asep_a=asep_a,
        asep_b=asep_b,
        asep=asep_total(asep_a, asep_b),
        capacity_a=cap_a,
        capacity_b=cap_b,
        capacity=capacity_total(cap_a, cap_b),
        flags={"asep_a": "quadrature", "asep_b": "phi1", "capacity": "cdf-quadrature"},
    )
