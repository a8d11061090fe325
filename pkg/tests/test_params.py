import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pendular.params import (
    HBAR,
    K_B,
    DiosiValidityError,
    ParameterError,
    RawParams,
    derive_params,
    planck_occupation,
    schiller_raw,
    thermal_quadrature_variance_gaussian,
    thermal_quadrature_variance_paper,
    thermal_sigma_x,
)


@pytest.fixture(scope="module")
def p():
    return derive_params(schiller_raw())


def test_published_rates(p):
    assert p.cavity_decay == pytest.approx(3.14e6, rel=2e-3)
    assert p.coupling == pytest.approx(1.77e17, rel=2e-3)
    assert p.optical_frequency == pytest.approx(1.77e15, rel=2e-3)
    # 0.5 omega_m / Q at Q = 4e6; the quoted 0.0363 belongs to Q = 2.25e6
    assert p.mirror_damping == pytest.approx(0.5 * 2 * math.pi * 26e3 / 4e6, rel=1e-14)
    assert p.mirror_damping == pytest.approx(0.0204, rel=1e-3)
    hot = derive_params(schiller_raw(temperature=70.0))
    assert hot.mirror_damping == pytest.approx(0.0363, rel=1e-3)


def test_occupation_and_scales(p):
    assert p.mean_occupation == pytest.approx(3.36e6, rel=2e-3)
    assert p.position_scale == pytest.approx(5.6824e-18, rel=1e-3)
    assert p.momentum_scale == pytest.approx(9.283e-18, rel=1e-3)
    assert p.position_scale * p.momentum_scale == pytest.approx(HBAR / 2, rel=1e-15)


def test_pump_flux_bookkeeping(p):
    assert p.pump**2 / p.cavity_decay == pytest.approx(p.laser_power / (HBAR * p.optical_frequency), rel=1e-14)
    assert p.pump == pytest.approx(2.8996e11, rel=1e-3)


def test_de_broglie(p):
    assert p.thermal_de_broglie == pytest.approx(HBAR / math.sqrt(4 * 1e-5 * K_B * 4.2), rel=1e-14)


@pytest.mark.parametrize("name", ["mirror_mass", "mirror_frequency", "quality_factor", "cavity_length",
                                  "finesse", "optical_wavelength", "temperature"])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_nonpositive_inputs_name_the_field(name, bad):
    raw = dataclasses.replace(schiller_raw(), **{name: bad})
    with pytest.raises(ParameterError) as e:
        derive_params(raw)
    assert e.value.field == name


def test_power_may_be_zero_not_negative():
    derive_params(schiller_raw(laser_power=0.0))
    with pytest.raises(ParameterError, match="laser_power"):
        derive_params(schiller_raw(laser_power=-1e-3))


def test_negative_detuning_allowed():
    assert derive_params(schiller_raw(detuning=-5e6)).detuning == -5e6


def test_diosi_floor():
    T_low = 5 * HBAR * 2 * math.pi * 26e3 / K_B
    with pytest.raises(DiosiValidityError):
        derive_params(schiller_raw(temperature=T_low))
    relaxed = derive_params(schiller_raw(temperature=T_low), min_thermal_ratio=1.0)
    assert relaxed.thermal_ratio == pytest.approx(5.0)


def test_with_rederives(p):
    q = p.with_(laser_power=0.1)
    assert q.laser_power == 0.1
    assert q.pump == pytest.approx(p.pump * math.sqrt(20), rel=1e-14)


def test_planck():
    wm = 1.63e5
    assert planck_occupation(1.8e-6, wm) == pytest.approx(1.0, rel=0.05)
    assert planck_occupation(1e-12, wm) < 1e-300
    n = planck_occupation(4.2, wm)
    assert n == pytest.approx(K_B * 4.2 / (HBAR * wm), rel=1e-4)
    assert n == pytest.approx(3.36e6, rel=0.01)
    with pytest.raises(ParameterError):
        planck_occupation(0.0, wm)
    with pytest.raises(ParameterError):
        planck_occupation(-1.0, wm)


@given(st.floats(min_value=0.01, max_value=1e3))
def test_planck_high_temperature_limit(T):
    wm = 2 * math.pi * 26e3
    ratio = K_B * T / (HBAR * wm)
    if ratio > 50:
        assert planck_occupation(T, wm) == pytest.approx(ratio, rel=0.01)


def test_thermal_variance_formulas():
    wm = 2 * math.pi * 26e3
    assert thermal_quadrature_variance_paper(4.2, wm) == pytest.approx(2.2e10, rel=0.01)
    assert thermal_quadrature_variance_paper(0.0, wm) == 1.0
    assert thermal_quadrature_variance_paper(2e-3, wm) == pytest.approx(2.27e5, rel=0.01)
    n = K_B * 4.2 / (HBAR * wm)
    assert thermal_quadrature_variance_gaussian(4.2, wm) == pytest.approx(1 + 2 * n, rel=1e-12)


def test_thermal_sigma_x(p):
    assert thermal_sigma_x(4.2, p) == pytest.approx(1.47e-14, rel=5e-3)
    assert thermal_sigma_x(16.8, p) == pytest.approx(2 * thermal_sigma_x(4.2, p), rel=1e-14)
    assert thermal_sigma_x(70.0, p) == pytest.approx(6.0e-14, rel=0.01)


positive = st.floats(min_value=1e-3, max_value=1e3)


@settings(max_examples=200)
@given(m=positive, w=positive, q=positive, L=positive, F=positive, lam=positive, P=positive)
def test_minimum_uncertainty_product_and_purity(m, w, q, L, F, lam, P):
    raw = RawParams(m * 1e-5, w * 1e5, q * 1e6, L * 1e-2, F * 1e4, lam * 1e-6, P * 1e-3, 300.0)
    a, b = derive_params(raw), derive_params(raw)
    assert a.position_scale * a.momentum_scale == pytest.approx(HBAR / 2, rel=4e-16)
    assert a == b
