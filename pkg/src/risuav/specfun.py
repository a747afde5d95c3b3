"""
Special functions used by the closed-form link statistics.

Thin, domain-checked wrappers around scipy where scipy is reliable (log-gamma,
regularized incomplete gamma, erfc, I0, noncentral chi-square tails), and
self-contained series/integral evaluators for the pieces scipy either lacks
(Humbert Phi1) or handles poorly for our arguments (1F1 with large negative
argument, the truncated 2F1 integral).

Every function here is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

__all__ = [
    "SeriesControl",
    "DEFAULT_SERIES",
    "ConvergenceError",
    "QUAD_EPSABS",
    "QUAD_EPSREL",
    "QUAD_LIMIT",
    "quad",
    "series_usable",
    "ln_gamma",
    "reg_lower_gamma",
    "gaussian_q",
    "bessel_i0",
    "marcum_q1",
    "laguerre",
    "hyp2f1_ratio",
    "split_series_integral",
    "hyp1f1",
    "humbert_phi1",
    "humbert_phi1_series",
]

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 2000

# distance from an integer below which a csc(pi r) form is treated as singular
INTEGER_GUARD = 1e-6


class ConvergenceError(ArithmeticError):
    """A series failed to converge; ``partial`` holds the last partial sum."""

    def __init__(self, message, partial=float("nan"), terms=0):
        super().__init__(message)
        self.partial = partial
        self.terms = terms


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the infinite series.

    A series stops once a term drops below ``max(abs_tol, rel_tol*|sum|)``;
    exceeding ``max_terms`` raises ConvergenceError.
    """

    max_terms: int = 10_000
    rel_tol: float = 1e-12
    abs_tol: float = 1e-300

    def __post_init__(self):
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise ValueError("max_terms must be a positive integer")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("at least one of abs_tol, rel_tol must be positive")

    def small(self, term, total):
        return abs(term) <= max(self.abs_tol, self.rel_tol * abs(total))


DEFAULT_SERIES = SeriesControl()


# relative cancellation error accepted in a truncated alternating sum
CANCELLATION_LIMIT = 1e-9


def series_usable(terms, total, ctl=DEFAULT_SERIES):
    """True when a truncated alternating sum is trustworthy.

    The last term must be negligible and rounding from the largest term must
    not dominate the (possibly heavily cancelled) total.
    """
    terms = np.asarray(terms, dtype=float)
    if not np.all(np.isfinite(terms)) or not np.isfinite(total) or total == 0:
        return False
    peak = np.max(np.abs(terms))
    if peak * np.finfo(float).eps > CANCELLATION_LIMIT * abs(total):
        return False
    return ctl.small(terms[-1], total) or abs(terms[-1]) <= CANCELLATION_LIMIT * abs(total)


def quad(func, a, b, points=None, **kwargs):
    """Adaptive Gauss-Kronrod quadrature with the package-wide tolerances."""
    opts = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    opts.update(kwargs)
    if points is not None:
        points = [p for p in points if a < p < b]
        if points and np.isfinite(a) and np.isfinite(b):
            opts["points"] = points
    value, _ = integrate.quad(func, a, b, **opts)
    return value


def _check_positive(name, x):
    if not x > 0:
        raise ValueError(f"{name} must be positive, got {x!r}")


def ln_gamma(x):
    """Natural logarithm of the Gamma function for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("ln_gamma is defined here only for positive arguments")
    out = special.gammaln(x)
    return out[()] if out.ndim == 0 else out


def reg_lower_gamma(a, x):
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a)."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~(a > 0)) or np.any(~(x >= 0)):
        raise ValueError("reg_lower_gamma needs a > 0 and x >= 0")
    out = special.gammainc(a, x)
    return out[()] if out.ndim == 0 else out


def gaussian_q(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return out[()] if out.ndim == 0 else out


def bessel_i0(x, scaled=False):
    """Modified Bessel function I0(x); ``scaled=True`` returns exp(-x) I0(x)."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise ValueError("bessel_i0 expects x >= 0")
    out = special.i0e(x) if scaled else special.i0(x)
    return out[()] if out.ndim == 0 else out


def marcum_q1(a, b):
    """First-order Marcum Q function.

    Q1(a, b) is the survival function of a noncentral chi-square variate with
    2 degrees of freedom and noncentrality a**2, evaluated at b**2.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a >= 0)) or np.any(~(b >= 0)):
        raise ValueError("marcum_q1 expects a >= 0 and b >= 0")
    out = stats.ncx2.sf(b * b, 2.0, a * a)
    out = np.clip(out, 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def marcum_q1_complement(a, b):
    """1 - Q1(a, b) computed without cancellation (the noncentral chi-square CDF)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.clip(stats.ncx2.cdf(b * b, 2.0, a * a), 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def laguerre(n, alpha, x):
    """Generalized Laguerre polynomial L_n^(alpha)(x) by the three-term recurrence."""
    n = int(n)
    if n < 0:
        raise ValueError("laguerre degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev[()] if prev.ndim == 0 else prev
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur[()] if np.ndim(cur) == 0 else cur


def laguerre_sequence(n_max, alpha, x):
    """Array of L_k^(alpha)(x) for k = 0..n_max."""
    out = np.empty(n_max + 1)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 + alpha - x
    for k in range(1, n_max):
        out[k + 1] = ((2 * k + 1 + alpha - x) * out[k] - (k + alpha) * out[k - 1]) / (k + 1)
    return out


def _near_integer(r):
    return abs(r - round(r)) < INTEGER_GUARD


def split_series_integral(r, t, ctl=DEFAULT_SERIES):
    r"""Evaluate \int_0^t x^r/(1+x) dx for t > 1 and non-integer r.

    Splits the range at 1 and sums
    ``sum_k (-1)^k t^(r-k)/(r-k) - pi*csc(pi*r)``.
    """
    if not t > 1:
        raise ValueError("split form needs t > 1")
    if _near_integer(r):
        raise ValueError(f"split form is singular for integer r (got {r!r})")
    total = 0.0
    log_t = math.log(t)
    for k in range(ctl.max_terms):
        term = (-1) ** k * math.exp((r - k) * log_t) / (r - k)
        total += term
        # terms shrink geometrically once k > r
        if k > r and ctl.small(term, total):
            return total - math.pi / math.sin(math.pi * r)
    raise ConvergenceError("split series did not converge", total, ctl.max_terms)


def _pfaff_series(mu, u, ctl):
    # int_0^u x^(mu-1)/(1+x) dx = u^mu/(mu(1+u)) * sum_n n!/(1+mu)_n z^n, z = u/(1+u)
    z = u / (1.0 + u)
    term = 1.0
    total = 1.0
    for n in range(ctl.max_terms):
        term *= (n + 1) / (mu + 1 + n) * z
        total += term
        if ctl.small(term, total):
            return math.exp(mu * math.log(u) - math.log(mu) - math.log1p(u)) * total
    raise ConvergenceError("Pfaff series did not converge", total, ctl.max_terms)


def hyp2f1_ratio(mu, u, ctl=DEFAULT_SERIES):
    r"""Truncated Mellin integral \int_0^u x^(mu-1)/(1+x) dx.

    Equals (u^mu/mu) * 2F1(1, mu; 1+mu; -u).  Small ``u`` uses the Pfaff
    transformed series; ``u >= 2`` uses the split-at-one series with the
    csc(pi*r) constant, falling back to quadrature when mu is an integer.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if not u >= 0:
        raise ValueError(f"u must be non-negative, got {u!r}")
    if u == 0:
        return 0.0
    if mu == 1.0:
        return math.log1p(u)
    if u < 2.0:
        return _pfaff_series(mu, u, ctl)
    r = mu - 1.0
    if _near_integer(r):
        head = _pfaff_series(mu, 1.0, ctl)
        return head + quad(lambda x: x ** r / (1.0 + x), 1.0, u)
    return split_series_integral(r, u, ctl)


def hyp1f1(a, b, x, ctl=DEFAULT_SERIES):
    """Kummer's confluent hypergeometric function 1F1(a; b; x).

    Direct power series for x >= 0; for x < 0 the Kummer transformation
    exp(x) * 1F1(b - a; b; -x) keeps all terms the same sign when b > a.
    """
    if not b > 0:
        raise ValueError("hyp1f1 needs b > 0")
    if x < 0:
        return math.exp(x) * _hyp1f1_series(b - a, b, -x, ctl)
    return _hyp1f1_series(a, b, x, ctl)


def _hyp1f1_series(a, b, x, ctl):
    term = 1.0
    total = 1.0
    for n in range(ctl.max_terms):
        term *= (a + n) / (b + n) * x / (n + 1)
        total += term
        if term == 0.0 or (n + 1 > abs(x) and ctl.small(term, total)):
            return total
    raise ConvergenceError("1F1 series did not converge", total, ctl.max_terms)


def humbert_phi1(a, b, c, x, y):
    """Humbert confluent function Phi1(a, b; c; x, y) via its Euler integral.

    Phi1 = Gamma(c)/(Gamma(a)Gamma(c-a)) *
           int_0^1 t^(a-1) (1-t)^(c-a-1) (1-x t)^(-b) exp(y t) dt,
    valid for c > a > 0 and x < 1.
    """
    if not x < 1:
        raise ValueError("humbert_phi1 requires x < 1")
    if not (c > a > 0):
        raise ValueError("humbert_phi1 integral form requires c > a > 0")
    norm = math.exp(special.gammaln(c) - special.gammaln(a) - special.gammaln(c - a))
    if a == 0.5 and c == 1.0:
        # t = sin^2(theta) removes both endpoint singularities
        def f(theta):
            t = math.sin(theta) ** 2
            return 2.0 * (1.0 - x * t) ** (-b) * math.exp(y * t)

        return norm * quad(f, 0.0, math.pi / 2)

    def g(t):
        return (1.0 - x * t) ** (-b) * math.exp(y * t)

    return norm * quad(g, 0.0, 1.0, weight="alg", wvar=(a - 1.0, c - a - 1.0))


def humbert_phi1_series(a, b, c, x, y, ctl=DEFAULT_SERIES):
    """Double power series of Phi1, for |x| < 1.

    Sums sum_m (b)_m x^m/m! * sum_n (a)_{m+n}/(c)_{m+n} y^n/n! row by row.
    """
    if not abs(x) < 1:
        raise ValueError("series form requires |x| < 1")
    total = 0.0
    outer = 1.0  # (a)_m/(c)_m (b)_m x^m / m!
    for m in range(ctl.max_terms):
        if m > 0:
            outer *= (a + m - 1) * (b + m - 1) / ((c + m - 1) * m) * x
        # inner row: sum_n (a+m)_n/(c+m)_n y^n/n! = 1F1(a+m; c+m; y)
        row = outer * _hyp1f1_series(a + m, c + m, y, ctl) if y >= 0 else \
            outer * math.exp(y) * _hyp1f1_series(c - a, c + m, -y, ctl)
        total += row
        if m > 2 and ctl.small(row, total):
            return total
    raise ConvergenceError("Phi1 series did not converge", total, ctl.max_terms)
