import cmath
import math

import pytest
from scipy import special

from zetatrace import oracle
from zetatrace.errors import DivergenceDetected, NonConvergent


def test_lanczos_gamma_accuracy_on_strip():
    import random

    rng = random.Random(314)
    for _ in range(40):
        z = complex(rng.uniform(0.5, 5.0), rng.uniform(-5.0, 5.0))
        want = complex(special.gamma(z))
        assert oracle.gamma(z) == pytest.approx(want, rel=1e-12)


def test_lanczos_gamma_reflection():
    for z in (-0.5, -1.5 + 0.3j, -2.7):
        want = complex(special.gamma(z))
        assert oracle.gamma(z) == pytest.approx(want, rel=1e-10)


def test_lanczos_gamma_known_values():
    assert oracle.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert oracle.gamma(1.0) == pytest.approx(1.0, rel=1e-13)
    assert oracle.gamma(4.0) == pytest.approx(6.0, rel=1e-13)


def test_damped_quadrature_pure_oscillation():
    # int_0^inf e^(i r) dr -> i
    got = oracle.damped_quadrature(lambda r: 1.0, 1.0)
    assert got == pytest.approx(1j, abs=1e-6)


def test_damped_quadrature_fresnel():
    got = oracle.gauss_power_osc(0.0, 1.0)
    want = math.sqrt(math.pi) * cmath.exp(-1j * math.pi / 4)
    assert got == pytest.approx(want, rel=1e-6)


def test_damped_quadrature_real_gamma():
    # no oscillation: int_0^inf r^(-1/2) e^(-r) dr = Gamma(1/2)
    got = oracle.damped_quadrature(
        lambda r: r**-0.5 * math.exp(-r) if r > 0 else 0.0, 0.0
    )
    assert got == pytest.approx(math.sqrt(math.pi), rel=1e-8)


def test_small_z_limit_linear_data():
    samples = {z: 2.0 + 3.0 * z for z in (-0.2, -0.1, -0.05)}
    assert oracle.small_z_limit(samples) == pytest.approx(2.0, abs=1e-10)


def test_small_z_limit_single_sample_rejected():
    with pytest.raises(NonConvergent):
        oracle.small_z_limit({-0.1: 1.0})


def test_small_z_limit_model_quotients():
    from zetatrace.engine import expectation
    from zetatrace.models import harmonic_oscillator_1d, topological_oscillator
    from zetatrace.tables import PRINCIPAL

    for model, obs, bindings in [
        (topological_oscillator(), "chi_top", {"J": 1.0}),
        (harmonic_oscillator_1d(), "H", {"m": 1.0, "hbar": 1.0, "omega": 1.0}),
    ]:
        tv = 10.0
        res = expectation(model, obs, PRINCIPAL)
        samples = {
            z: oracle.model_quotient(model, obs, z, tv, bindings)
            for z in (-0.2, -0.1, -0.05)
        }
        got = oracle.small_z_limit(samples)
        assert got == pytest.approx(res.finite_t.eval(bindings, tv), rel=1e-4)


def test_finite_t_sweep_recovers_constant_plus_decay():
    m = 1.37
    fit = oracle.finite_t_sweep(lambda t: m - 3.0 / t, [10, 20, 40, 80])
    assert fit.limit == pytest.approx(m, abs=1e-3)
    assert fit.residual < 1e-9


def test_finite_t_sweep_exact_constant():
    fit = oracle.finite_t_sweep(lambda t: 2.5 + 0j, [10, 20, 40])
    assert fit.limit == pytest.approx(2.5)
    assert fit.residual < 1e-12


def test_finite_t_sweep_detects_growth():
    with pytest.raises(DivergenceDetected):
        oracle.finite_t_sweep(lambda t: 0.01 * t, [10, 20, 40, 80])


def test_decay_exponent_fits_power_law():
    assert oracle.decay_exponent(lambda t: 5.0 / t, [10, 20, 40, 80]) == pytest.approx(
        -1.0, abs=1e-12
    )
    assert oracle.decay_exponent(lambda t: 2.0 / t**2, [10, 20, 40]) == pytest.approx(
        -2.0, abs=1e-12
    )
