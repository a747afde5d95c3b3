import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from risuav import channel
from risuav.channel import A2gEnvironment, RisSpec, Scene

WAVELENGTH = 299_792_458.0 / 2e9


def test_wavelength():
    assert channel.wavelength(2e9) == pytest.approx(0.14990, abs=1e-5)
    with pytest.raises(ValueError):
        channel.wavelength(0.0)


def test_db_round_trip():
    assert channel.db_to_linear(4.77) == pytest.approx(3.0, rel=1e-3)
    assert channel.linear_to_db(channel.db_to_linear(-13.2)) == pytest.approx(-13.2, rel=1e-14)


class TestPathLoss:
    def test_unity(self):
        d = WAVELENGTH / (4 * math.pi)
        spec = RisSpec(5, d1=d, d2=d, g1_dbi=0, g2_dbi=0)
        assert channel.path_loss(spec, WAVELENGTH) == pytest.approx(1.0, rel=1e-13)

    def test_figure_value(self):
        spec = RisSpec(5, d1=40, d2=40)
        g = 10 ** 0.5
        direct = (4 * math.pi) ** 4 * 40**2 * 40**2 / (WAVELENGTH**4 * g * g)
        value = channel.path_loss(spec, WAVELENGTH)
        assert value == pytest.approx(direct, rel=1e-13)
        assert value == pytest.approx(1.264e13, rel=1e-3)

    def test_distance_scaling(self):
        base = channel.path_loss(RisSpec(5, d1=40, d2=40), WAVELENGTH)
        assert channel.path_loss(RisSpec(5, d1=80, d2=40), WAVELENGTH) == pytest.approx(4 * base, rel=1e-14)

    def test_efficiency(self):
        base = channel.path_loss(RisSpec(5), WAVELENGTH)
        assert channel.path_loss(RisSpec(5, efficiency=0.5), WAVELENGTH) == pytest.approx(2 * base, rel=1e-14)


def _product_moments(m1, m2, om1=1.0, om2=1.0):
    """Mean and variance of alpha*beta by quadrature over the product density."""
    f1 = stats.nakagami(m1, scale=math.sqrt(om1))
    f2 = stats.nakagami(m2, scale=math.sqrt(om2))

    def moment(k):
        def inner(a):
            val, _ = integrate.quad(lambda b: (a * b) ** k * f2.pdf(b), 0, np.inf, epsabs=0, epsrel=1e-12)
            return val * f1.pdf(a)

        val, _ = integrate.quad(inner, 0, np.inf, epsabs=0, epsrel=1e-11)
        return val

    mean = moment(1)
    return mean, moment(2) - mean**2


class TestGammaFit:
    def test_rayleigh_closed_form(self):
        fit = channel.gamma_fit(RisSpec(5), WAVELENGTH)
        ratio = math.pi**2 / 16
        assert fit.a == pytest.approx(5 * ratio / (1 - ratio), rel=1e-13)
        assert fit.b == pytest.approx((1 - ratio) / (math.pi / 4), rel=1e-13)
        assert fit.a == pytest.approx(8.0498, abs=1e-4)
        assert fit.b == pytest.approx(0.48784, abs=1e-5)

    def test_doubling_elements(self):
        f5 = channel.gamma_fit(RisSpec(5, m1=1.7, m2=3.0), WAVELENGTH)
        f10 = channel.gamma_fit(RisSpec(10, m1=1.7, m2=3.0), WAVELENGTH)
        assert f10.a == pytest.approx(2 * f5.a, rel=1e-14)
        assert f10.b == f5.b

    def test_moment_matching_quadrature(self):
        mean, var = _product_moments(2.5, 2.5)
        fit = channel.gamma_fit(RisSpec(10, m1=2.5, m2=2.5), WAVELENGTH)
        assert fit.a == pytest.approx(10 * mean**2 / var, rel=1e-8)
        assert fit.b == pytest.approx(var / mean, rel=1e-8)

    def test_unequal_spreads(self):
        mean, var = _product_moments(1.3, 4.0, 2.0, 0.5)
        fit = channel.gamma_fit(RisSpec(3, m1=1.3, m2=4.0, omega1=2.0, omega2=0.5), WAVELENGTH)
        assert fit.a * fit.b == pytest.approx(3 * mean, rel=1e-8)
        assert fit.a * fit.b**2 == pytest.approx(3 * var, rel=1e-8)

    def test_reference_loss(self):
        plain = channel.gamma_fit(RisSpec(5), WAVELENGTH)
        ref = channel.gamma_fit(RisSpec(5), WAVELENGTH, reference_loss=1e10)
        assert ref.path_loss == pytest.approx(plain.path_loss / 1e10, rel=1e-14)

    @pytest.mark.parametrize("kwargs", [{"n_elements": 0}, {"n_elements": 5, "m1": 0.4},
                                        {"n_elements": 5, "omega2": 0.0}, {"n_elements": 5, "d1": -1.0},
                                        {"n_elements": 5, "efficiency": 1.5}])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            RisSpec(**kwargs)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 200), st.floats(0.5, 20), st.floats(0.5, 20))
    def test_positive(self, n, m1, m2):
        fit = channel.gamma_fit(RisSpec(n, m1=m1, m2=m2), WAVELENGTH)
        assert fit.a > 0 and fit.b > 0


class TestLosProbability:
    def test_empty_product(self):
        assert channel.los_probability(30.0, 50.0) == 1.0

    def test_single_factor(self):
        expected = 1 - math.exp(-2500 * 0.25 / 450)
        assert channel.los_probability(50.0, 100.0) == pytest.approx(expected, rel=1e-14)
        assert channel.los_probability(50.0, 100.0) == pytest.approx(0.7507, abs=2e-4)

    def test_high_altitude(self):
        assert channel.los_probability(1e4, 500.0) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1, 500), st.floats(0, 2000))
    def test_range(self, h, r0):
        assert 0.0 <= channel.los_probability(h, r0) <= 1.0


class TestRicianFactor:
    def test_fixed(self):
        assert channel.rician_factor(A2gEnvironment(k0_db=4.77)) == pytest.approx(3.0, rel=1e-3)

    def test_model_limit(self):
        env = A2gEnvironment(k0_db=None, a2=1.3, b2=0.8, h=1e6, r0=1.0)
        assert channel.rician_factor(env) == pytest.approx(1.3 * math.exp(0.8 * math.pi / 2), rel=1e-6)
        overhead = A2gEnvironment(k0_db=None, a2=1.3, b2=0.8, r0=0.0)
        assert channel.rician_factor(overhead) == pytest.approx(1.3 * math.exp(0.8 * math.pi / 2), rel=1e-15)

    @pytest.mark.parametrize("h,r0", [(10, 300), (100, 0), (50, 50)])
    def test_model_flat(self, h, r0):
        env = A2gEnvironment(k0_db=None, a2=1.0, b2=0.0, h=h, r0=r0)
        assert channel.rician_factor(env) == 1.0

    def test_mode(self):
        assert A2gEnvironment().k0_mode == "fixed"
        assert A2gEnvironment(k0_db=None).k0_mode == "model"


class TestA2gLoss:
    def test_literal(self):
        # L0 = 10 m, alpha = 2 (P_LoS = 1 with a1 = 1, b1 = 1)
        env = A2gEnvironment(h=10.0, r0=0.0, a1=1.0, b1=1.0)
        assert channel.los_probability(10.0, 0.0) == 1.0
        assert channel.a2g_loss(env) == pytest.approx(20.0, rel=1e-14)

    def test_physical(self):
        env = A2gEnvironment(h=10.0, r0=0.0, a1=1.0, b1=1.0, loss_convention="physical")
        assert channel.a2g_loss(env) == pytest.approx(100.0, rel=1e-13)

    def test_composed(self):
        env = A2gEnvironment(h=50.0, r0=100.0, a1=1.2, b1=2.1, excess_loss_db=3.0)
        p = 1 - math.exp(-2500 * 0.25 / 450)
        alpha = 1.2 * p + 2.1
        expected = 10 * alpha * math.log10(math.hypot(50, 100)) + 3.0
        assert channel.path_loss_exponent(env) == pytest.approx(alpha, rel=1e-14)
        assert channel.a2g_loss(env) == pytest.approx(expected, rel=1e-14)

    def test_literal_nonpositive(self):
        with pytest.raises(ValueError):
            channel.a2g_loss(A2gEnvironment(h=0.5, r0=0.0))

    def test_invalid_convention(self):
        with pytest.raises(ValueError):
            A2gEnvironment(loss_convention="other")


class TestScene:
    def test_overhead_ris(self):
        pairs, _ = channel.scene_distances(Scene(uav_x=40.0, height=33.0, ris_offsets=(0.0,)))
        assert pairs[0] == (40.0, 33.0)

    def test_uav_at_destination(self):
        _, r0 = channel.scene_distances(Scene(uav_x=100.0))
        assert r0 == 0.0

    def test_figure_scene(self):
        pairs, r0 = channel.scene_distances(Scene())
        assert r0 == 30.0
        assert pairs[0] == pytest.approx((40.0, math.sqrt(30**2 + 50**2)))
        assert pairs[1] == pytest.approx((math.sqrt(40**2 + 25), math.sqrt(30**2 + 25 + 50**2)))
        assert pairs[2] == pairs[1]

    def test_too_few_offsets(self):
        with pytest.raises(ValueError):
            channel.scene_distances(Scene(), 4)

    def test_invalid(self):
        with pytest.raises(ValueError):
            Scene(height=0.0)
