"""
Cesium level scheme, decay rates and vapor density.

Level numbering follows the pump/lasing cycle::

    |1> 6S1/2   ground
    |2> 7P1/2   pumped at 459 nm
    |3> 7S1/2   upper lasing level
    |4> 6P3/2   lower lasing level (1470 nm transition 3 -> 4)
    |5> 5D3/2   auxiliary, fed from |2>
    |6> 6P1/2   auxiliary, fed from |3> and |5>

All quantities are SI. Decay rates are in s^-1.
"""

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import constants as sc

__all__ = [
    "AtomicSystem",
    "DomainError",
    "REQUIRED_RATES",
    "load_atomic_system",
    "default_system",
    "vapor_number_density",
    "saturation_intensity",
    "cycle_time",
]

# Every rate the density-matrix equations read.
REQUIRED_RATES = (
    (2, 1), (2, 3), (2, 5), (3, 4), (3, 6), (4, 1), (5, 4), (5, 6), (6, 1),
)

T_MIN = 273.0
T_MAX = 500.0


class DomainError(ValueError):
    """An input lies outside the physical domain of a model."""


@dataclass(frozen=True)
class AtomicSystem:
    levels: tuple
    decay_rates: dict
    lambda_pump: float
    lambda_lase: float
    gamma0_lase: float
    dipole_moment: float
    atomic_mass: float
    tau_cyc: float
    t_int: float
    version: str = "custom"

    def __post_init__(self):
        missing = [k for k in REQUIRED_RATES if k not in self.decay_rates]
        if missing:
            raise DomainError(f"decay_rates missing transitions {missing}")
        for key, value in self.decay_rates.items():
            if not value > 0:
                raise DomainError(f"decay rate {key} must be positive, got {value}")
        for name in ("lambda_pump", "lambda_lase", "gamma0_lase", "dipole_moment",
                     "atomic_mass", "tau_cyc", "t_int"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    def rate(self, i, j):
        """Decay rate |i> -> |j> in s^-1. Raises KeyError for unknown channels."""
        return self.decay_rates[(i, j)]

    @property
    def gamma2_natural(self):
        """Total spontaneous decay out of |2> (the pump-broadening prefactor)."""
        return self.rate(2, 1) + self.rate(2, 3) + self.rate(2, 5)

    @property
    def omega_lase(self):
        return 2 * math.pi * sc.c / self.lambda_lase

    def replace(self, **changes):
        kwargs = {k: getattr(self, k) for k in (
            "levels", "decay_rates", "lambda_pump", "lambda_lase", "gamma0_lase",
            "dipole_moment", "atomic_mass", "tau_cyc", "t_int", "version")}
        kwargs.update(changes)
        return AtomicSystem(**kwargs)


def _parse_rate_key(key):
    i, j = key.split("-")
    return int(i), int(j)


def load_atomic_system(path=None):
    """Build an :class:`AtomicSystem` from a JSON config.

    With ``path=None`` the shipped ``cs_default.json`` is used.
    """
    if path is None:
        text = resources.files("ilsim.data").joinpath("cs_default.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        raw = json.loads(text)
        rates = {_parse_rate_key(k): float(v) for k, v in raw["decay_rates"].items()}
        return AtomicSystem(
            levels=tuple(raw.get("levels", ("1", "2", "3", "4", "5", "6"))),
            decay_rates=rates,
            lambda_pump=raw["wavelengths_nm"]["pump"] * 1e-9,
            lambda_lase=raw["wavelengths_nm"]["lase"] * 1e-9,
            gamma0_lase=2 * math.pi * raw["gamma0_lase_MHz_over_2pi"] * 1e6,
            dipole_moment=float(raw["dipole_moment_Cm"]),
            atomic_mass=float(raw["mass_kg"]),
            tau_cyc=raw["tau_cyc_us"] * 1e-6,
            t_int=raw["t_int_ns"] * 1e-9,
            version=str(raw.get("version", "custom")),
        )
    except DomainError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise DomainError(f"malformed atomic config: {exc!r}") from exc


_DEFAULT = None


def default_system():
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_atomic_system()
    return _DEFAULT


# Alcock, Itkin & Horrigan (1984) liquid-Cs vapor pressure, log10(p / atm).
_ANTOINE_A = 8.232
_ANTOINE_B = 4062.0
_ANTOINE_C = 1.3359
_REFERENCE_T = 373.15
_REFERENCE_DENSITY = 1.57e19  # m^-3 at 100 C


def _raw_density(T):
    p_atm = 10.0 ** (_ANTOINE_A - _ANTOINE_B / T - _ANTOINE_C * np.log10(T))
    return 101325.0 * p_atm / (sc.k * T)


_CALIBRATION = _REFERENCE_DENSITY / _raw_density(_REFERENCE_T)


def vapor_number_density(T):
    """Saturated Cs vapor number density in m^-3 at temperature ``T`` (K).

    Single liquid-phase vapor-pressure curve, scaled so that the density at
    100 C is exactly 1.57e13 cm^-3. Valid for 273 K < T < 500 K.
    """
    T_arr = np.asarray(T, dtype=float)
    if np.any(~(T_arr > T_MIN)) or np.any(~(T_arr < T_MAX)):
        raise DomainError(f"temperature {T} K outside ({T_MIN}, {T_MAX}) K")
    out = _CALIBRATION * _raw_density(T_arr)
    return float(out) if out.ndim == 0 else out


def saturation_intensity(system):
    """Pump saturation intensity pi h c Gamma / (3 lambda^3) in W/m^2."""
    lam = system.lambda_pump
    return math.pi * sc.h * sc.c * system.gamma2_natural / (3 * lam ** 3)


def cycle_time(system, omega):
    """Cycle time 1/Omega + 1/Gamma_2 + 1/(G34+G36) + 1/G41 through the pump loop.

    Used to cross-check the shipped ``tau_cyc`` constant; the dynamics read
    ``system.tau_cyc`` directly.
    """
    r = system.rate
    return (1.0 / omega + 1.0 / system.gamma2_natural
            + 1.0 / (r(3, 4) + r(3, 6)) + 1.0 / r(4, 1))
