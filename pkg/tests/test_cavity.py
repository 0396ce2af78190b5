import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ilsim.atomic_data import DomainError
from ilsim.cavity import (CavityConfig, PhaseShift, detuning_to_phase, emission_ratio,
                          load_cavity_config, loss_coefficient, mode_from_geometry, photon_lifetime,
                          reflectivity_finesse)


@pytest.fixture(scope="module")
def mode():
    return mode_from_geometry(load_cavity_config())


def test_mode_geometry(mode):
    # spot sizes on the curved and flat mirrors, mean waist
    assert mode.w_s1 == pytest.approx(0.429e-3, rel=5e-3)
    assert mode.w_s2 == pytest.approx(0.337e-3, rel=5e-3)
    assert mode.w0 == pytest.approx(0.383e-3, rel=5e-3)
    assert mode.FSR == pytest.approx(299792458 / 0.38, rel=1e-12)


def test_gaussian_beam_formula_independent():
    # plano-concave: waist at the flat mirror, z_R^2 = L (r - L)
    L, r, lam = 0.19, 0.5, 1470e-9
    zr = math.sqrt(L * (r - L))
    w_flat = math.sqrt(lam * zr / math.pi)
    w_curved = w_flat * math.sqrt(1 + (L / zr) ** 2)
    m = mode_from_geometry(CavityConfig())
    assert m.w_s2 == pytest.approx(w_flat, rel=1e-12)
    assert m.w_s1 == pytest.approx(w_curved, rel=1e-12)


def test_mirror_loss_estimate():
    cfg = CavityConfig(R1=0.345, R2=0.345)
    m = mode_from_geometry(cfg)
    assert m.kappa0 == pytest.approx(-math.log(0.345 ** 2) * 299792458 / 0.38, rel=1e-12)


def test_loss_coefficient_limits(mode):
    assert loss_coefficient(mode.finesse, 0.0) == 1.0
    assert loss_coefficient(mode.finesse, math.pi) == pytest.approx(mode.eta_max, rel=1e-15)


@given(st.floats(min_value=0.05, max_value=0.98))
@settings(max_examples=60, deadline=None)
def test_eta_equals_inverse_emission_ratio(R):
    # (1 + R^2 - 2R cos) / (1 - R)^2 == 1 + (2F/pi)^2 sin^2(phi/2) with F = pi sqrt(R) / (1 - R)
    phi = np.linspace(-4 * math.pi, 4 * math.pi, 401)
    F = reflectivity_finesse(R)
    lhs = emission_ratio(R, 0.0) / emission_ratio(R, phi)
    rhs = loss_coefficient(F, phi)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=0)


def test_eta_periodic_and_even():
    F = 3.07
    phi = np.linspace(-10, 10, 2001)
    base = loss_coefficient(F, phi)
    np.testing.assert_allclose(loss_coefficient(F, phi + 2 * math.pi), base, rtol=1e-12)
    np.testing.assert_allclose(loss_coefficient(F, -phi), base, rtol=1e-12)
    assert np.all(base >= 1.0)


def test_emission_ratio_domain():
    with pytest.raises(DomainError):
        emission_ratio(1.0, 0.3)
    assert emission_ratio(0.0, 1.0) == 1.0


def test_photon_lifetime_scales(mode):
    t1 = photon_lifetime(1.0, mode.kappa0)
    assert photon_lifetime(mode.eta_max, mode.kappa0) == pytest.approx(t1 / mode.eta_max)


def test_detuning_to_phase():
    fsr = 788.93e6
    p = detuning_to_phase(2 * math.pi * fsr / 2, fsr)
    assert p.delta_phi == pytest.approx(math.pi)
    p = detuning_to_phase(2 * math.pi * fsr * 2.25, fsr)
    assert p.winding == 2 and p.delta_phi == pytest.approx(0.5 * math.pi)
    with pytest.raises(DomainError):
        detuning_to_phase(1.0, 0.0)


@given(st.floats(min_value=-100, max_value=100))
def test_phase_shift_roundtrip(phi):
    p = PhaseShift.from_value(phi)
    assert 0 <= p.delta_phi < 2 * math.pi
    assert p.total == pytest.approx(phi, abs=1e-12)


def test_phase_flags():
    assert PhaseShift.from_value(2 * math.pi).is_resonant()
    assert PhaseShift.from_value(3 * math.pi).is_antiresonant()
    assert float(PhaseShift(1.0)) == 1.0


@pytest.mark.parametrize("kwargs", [dict(L=0.6), dict(R1=1.0), dict(R2=0.0), dict(L_cell=0.3),
                                    dict(coupling_fraction=0.0)])
def test_config_validation(kwargs):
    with pytest.raises(DomainError):
        CavityConfig(**kwargs)


def test_with_reflectivity_rescales_measured_kappa():
    cfg = load_cavity_config()
    same = cfg.with_reflectivity(0.345)
    assert mode_from_geometry(same).kappa0 == pytest.approx(mode_from_geometry(cfg).kappa0, rel=1e-12)
    high = mode_from_geometry(cfg.with_reflectivity(0.8))
    assert high.finesse > 10
    assert high.kappa0 < mode_from_geometry(cfg).kappa0


def test_malformed_cavity_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"L_mm": 190}')
    with pytest.raises(DomainError):
        load_cavity_config(p)
    p.write_text("[1, 2]")
    with pytest.raises(DomainError):
        load_cavity_config(p)


@pytest.mark.parametrize("phi", [-5e-324, -1e-300, -0.0])
def test_phase_shift_tiny_negative(phi):
    p = PhaseShift.from_value(phi)
    assert p.delta_phi == 0.0 and math.copysign(1.0, p.delta_phi) == 1.0 and p.winding == 0
