"""
Geometry and large-scale channel model.

Covers the RIS far-field path loss, the moment-matched Gamma fit of the
cascaded amplitude sum, the air-to-ground LoS probability, Rician factor and
path loss, and the planar scene used for the location sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from scipy import constants, special

__all__ = [
    "RisSpec",
    "GammaFit",
    "A2gEnvironment",
    "Scene",
    "db_to_linear",
    "linear_to_db",
    "wavelength",
    "path_loss",
    "gamma_fit",
    "los_probability",
    "rician_factor",
    "a2g_loss",
    "scene_distances",
]

LITERAL = "literal-paper"
PHYSICAL = "physical"
LOSS_CONVENTIONS = (LITERAL, PHYSICAL)


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def wavelength(carrier_hz):
    if not carrier_hz > 0:
        raise ValueError("carrier frequency must be positive")
    return constants.c / carrier_hz


@dataclass(frozen=True)
class RisSpec:
    """Physical description of one RIS-assisted path."""

    n_elements: int
    m1: float = 1.0
    m2: float = 1.0
    omega1: float = 1.0
    omega2: float = 1.0
    d1: float = 40.0
    d2: float = 40.0
    g1_dbi: float = 5.0
    g2_dbi: float = 5.0
    efficiency: float = 1.0

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ValueError(f"n_elements must be a positive integer, got {self.n_elements!r}")
        if self.m1 < 0.5 or self.m2 < 0.5:
            raise ValueError("Nakagami shapes must be >= 0.5")
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ValueError("spread parameters must be positive")
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError("distances must be positive")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class GammaFit:
    """Gamma(shape=a, scale=b) fit of Z = sum(alpha*beta) plus the SNR divisor.

    ``path_loss`` is whatever divides E_s/N_0 in the per-RIS SNR; by default
    the linear attenuation of :func:`path_loss`.
    """

    a: float
    b: float
    path_loss: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.path_loss > 0):
            raise ValueError("GammaFit fields must be positive")


def path_loss(spec: RisSpec, wavelength: float) -> float:
    """Far-field RIS path loss (linear attenuation, > 1 for realistic inputs)."""
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    g1 = db_to_linear(spec.g1_dbi)
    g2 = db_to_linear(spec.g2_dbi)
    gain = (wavelength / (4 * math.pi)) ** 4 * g1 * g2 / (spec.d1**2 * spec.d2**2) * spec.efficiency
    return 1.0 / gain


def _moments(m1, m2):
    # D = m1 m2 G(m1)^2 G(m2)^2, G = G(m1+1/2)^2 G(m2+1/2)^2, in log form
    log_d = math.log(m1 * m2) + 2 * (special.gammaln(m1) + special.gammaln(m2))
    log_g = 2 * (special.gammaln(m1 + 0.5) + special.gammaln(m2 + 0.5))
    return log_d, log_g


def gamma_fit(spec: RisSpec, wavelength: float, reference_loss: float = 1.0) -> GammaFit:
    """Moment-matched Gamma shape/scale for the RIS amplitude sum.

    ``reference_loss`` divides the path loss, i.e. the average SNR is quoted
    relative to that attenuation instead of to the transmitter.
    """
    log_d, log_g = _moments(spec.m1, spec.m2)
    # 1 - G/D is the normalized variance of a single product; Cauchy-Schwarz keeps it > 0
    ratio = math.exp(log_g - log_d)
    gap = -math.expm1(log_g - log_d)
    if not gap > 0:
        raise ArithmeticError("moment-matching denominator is not positive")
    a = spec.n_elements * ratio / gap
    mean_single = math.exp(
        special.gammaln(spec.m1 + 0.5) - special.gammaln(spec.m1)
        + special.gammaln(spec.m2 + 0.5) - special.gammaln(spec.m2)
    ) * math.sqrt(spec.omega1 * spec.omega2 / (spec.m1 * spec.m2))
    # scale = Var(alpha beta) / E[alpha beta]
    b = spec.omega1 * spec.omega2 * gap / mean_single
    return GammaFit(a=a, b=b, path_loss=path_loss(spec, wavelength) / reference_loss)


def los_probability(h: float, r0: float) -> float:
    """Probability of line of sight between the UAV and the ground node."""
    if not h > 0:
        raise ValueError("height must be positive")
    if not r0 >= 0:
        raise ValueError("horizontal distance must be non-negative")
    m = math.floor(r0 / 200.0 * math.sqrt(6.0) - 1.0)
    prob = 1.0
    for n in range(m + 1):
        prob *= 1.0 - math.exp(-(h**2) * (1.0 - (n + 0.5) / (m + 1)) ** 2 / 450.0)
    return prob


@dataclass(frozen=True)
class A2gEnvironment:
    """UAV-to-destination link environment.

    ``k0_db`` set means a fixed Rician factor; ``None`` selects the
    elevation model a2*exp(b2*atan(h/r0)).
    """

    h: float = 50.0
    r0: float = 30.0
    a1: float = 1.0
    b1: float = 2.0
    a2: float = 1.0
    b2: float = 0.0
    excess_loss_db: float = 0.0
    k0_db: Optional[float] = 4.77
    loss_convention: str = LITERAL

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("UAV height must be positive")
        if not self.r0 >= 0:
            raise ValueError("horizontal distance must be non-negative")
        if self.loss_convention not in LOSS_CONVENTIONS:
            raise ValueError(f"loss_convention must be one of {LOSS_CONVENTIONS}")
        if self.k0_db is None and not self.a2 > 0:
            raise ValueError("model Rician factor needs a2 > 0")

    @property
    def k0_mode(self):
        return "model" if self.k0_db is None else "fixed"

    def with_geometry(self, h, r0):
        return replace(self, h=h, r0=r0)


def rician_factor(env: A2gEnvironment) -> float:
    """Linear Rician factor K0."""
    if env.k0_db is not None:
        return db_to_linear(env.k0_db)
    elevation = math.pi / 2 if env.r0 == 0 else math.atan(env.h / env.r0)
    return env.a2 * math.exp(env.b2 * elevation)


def path_loss_exponent(env: A2gEnvironment) -> float:
    return env.a1 * los_probability(env.h, env.r0) + env.b1


def a2g_loss(env: A2gEnvironment) -> float:
    """Divisor L of the A2G SNR.

    The literal convention uses the dB figure 10*alpha*log10(L0) + A directly
    as a linear divisor; the physical one uses L0**alpha * 10**(A/10).
    """
    distance = math.hypot(env.h, env.r0)
    alpha = path_loss_exponent(env)
    if env.loss_convention == LITERAL:
        loss = 10.0 * alpha * math.log10(distance) + env.excess_loss_db
        if not loss > 0:
            raise ValueError(f"literal A2G loss is not positive ({loss:g}) at L0={distance:g} m")
        return loss
    return distance**alpha * db_to_linear(env.excess_loss_db)


@dataclass(frozen=True)
class Scene:
    """Planar layout: source at the origin, destination on the x axis.

    RISs sit on a line perpendicular to the baseline at ``ris_baseline``
    metres from the source; the UAV flies at (uav_x, height).
    """

    source_destination: float = 100.0
    ris_baseline: float = 40.0
    ris_offsets: Sequence[float] = field(default=(0.0, 5.0, -5.0))
    uav_x: float = 70.0
    height: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "ris_offsets", tuple(float(o) for o in self.ris_offsets))
        if not self.source_destination > 0 or not self.ris_baseline >= 0:
            raise ValueError("scene distances must be positive")
        if not self.height > 0:
            raise ValueError("UAV height must be positive")


def scene_distances(scene: Scene, n_ris: Optional[int] = None):
    """Per-RIS (d1, d2) pairs and the UAV-destination horizontal distance r0."""
    offsets = scene.ris_offsets if n_ris is None else scene.ris_offsets[:n_ris]
    if n_ris is not None and len(offsets) < n_ris:
        raise ValueError(f"scene has {len(scene.ris_offsets)} RIS offsets, {n_ris} needed")
    pairs = []
    for off in offsets:
        d1 = math.hypot(scene.ris_baseline, off)
        d2 = math.sqrt((scene.uav_x - scene.ris_baseline) ** 2 + off**2 + scene.height**2)
        if not (d1 > 0 and d2 > 0):
            raise ValueError(f"degenerate RIS distance for offset {off}")
        pairs.append((d1, d2))
    r0 = abs(scene.source_destination - scene.uav_x)
    return pairs, r0
