import json
from importlib import resources

import numpy as np
import pytest

from ilsim.atomic_data import (REQUIRED_RATES, DomainError, cycle_time, default_system,
                               load_atomic_system, saturation_intensity, vapor_number_density)
from ilsim.gain import rabi_frequency


def test_default_loads_with_closed_rate_map():
    s = default_system()
    assert len(s.levels) == 6
    for i, j in REQUIRED_RATES:
        assert s.rate(i, j) > 0


def test_missing_rate_is_an_error(tmp_path):
    raw = json.loads(resources.files("ilsim.data").joinpath("cs_default.json").read_text())
    del raw["decay_rates"]["5-4"]
    p = tmp_path / "cs.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(DomainError):
        load_atomic_system(p)


def test_malformed_json_is_domain_error(tmp_path):
    p = tmp_path / "cs.json"
    p.write_text('{"levels": 3}')
    with pytest.raises(DomainError):
        load_atomic_system(p)


def test_non_json_is_domain_error(tmp_path):
    p = tmp_path / "cs.json"
    p.write_text("not json")
    with pytest.raises(DomainError):
        load_atomic_system(p)


def test_unknown_rate_lookup():
    with pytest.raises(KeyError):
        default_system().rate(1, 6)


def test_vapor_density_reference_and_monotone():
    assert vapor_number_density(373.15) == pytest.approx(1.57e19, rel=1e-12)
    T = np.linspace(280, 490, 50)
    n = vapor_number_density(T)
    assert np.all(np.diff(n) > 0)


@pytest.mark.parametrize("T", [100.0, 272.9, 500.1, float("nan")])
def test_vapor_density_domain(T):
    with pytest.raises(DomainError):
        vapor_number_density(T)


def test_vapor_density_rises_between_threshold_temperatures():
    # density grows by roughly 3x from 72.5 C to 94.5 C
    r = vapor_number_density(367.65) / vapor_number_density(345.65)
    assert 2.5 < r < 4.5


def test_saturation_intensity():
    # 1.27 mW/cm^2 = 12.7 W/m^2
    assert saturation_intensity(default_system()) == pytest.approx(12.7, rel=1e-2)


def test_cycle_time_sums_stage_lifetimes():
    s = default_system()
    Om = rabi_frequency(1e4, s)
    expected = 1 / Om + 1 / s.gamma2_natural + 1 / (s.rate(3, 4) + s.rate(3, 6)) + 1 / s.rate(4, 1)
    assert cycle_time(s, Om) == pytest.approx(expected, rel=1e-15)
    assert cycle_time(s, Om) == pytest.approx(s.tau_cyc, rel=2e-3)


def test_interaction_time_matches_rates():
    s = default_system()
    # the shipped value is the three-digit quote, 19.8 ns
    assert 1 / (s.rate(3, 4) + s.rate(3, 6) + s.rate(4, 1)) == pytest.approx(s.t_int, rel=3e-3)


def test_replace_revalidates():
    s = default_system()
    with pytest.raises(DomainError):
        s.replace(tau_cyc=-1.0)
