"""
Pump physics and velocity-selective gain.

The chain runs pump intensity -> Rabi frequency and pump-broadened width ->
captured velocity class -> residual Doppler width -> effective atom number.
"""

import math
from dataclasses import dataclass

from scipy import constants as sc
from scipy import integrate
from scipy.special import erf

from .atomic_data import DomainError, saturation_intensity, vapor_number_density

__all__ = [
    "PumpVaporConfig",
    "GainParams",
    "rabi_frequency",
    "pump_broadened_width",
    "doppler_chain",
    "atoms_in_mode",
    "effective_atom_number",
    "effective_atom_number_quad",
    "coupling_constant",
    "derive_gain",
    "mw_per_mm2",
    "celsius",
]


def mw_per_mm2(value):
    """mW/mm^2 -> W/m^2."""
    return value * 1e3


def celsius(value):
    """Celsius -> kelvin."""
    return value + 273.15


@dataclass(frozen=True)
class PumpVaporConfig:
    I: float
    T: float
    system: object
    cavity: object
    delta_prime: float = 0.0

    def __post_init__(self):
        if self.I < 0:
            raise DomainError("pump intensity must be non-negative")
        vapor_number_density(self.T)  # domain check


@dataclass(frozen=True)
class GainParams:
    Omega: float
    Gamma2: float
    delta_v: float
    Gamma_D: float
    Gamma: float
    N: float
    N_eff: float
    g: float


def rabi_frequency(I, system):
    """Pump Rabi frequency sqrt(3 lambda^3 Gamma_21 I / (2 pi h c)) in rad/s."""
    if I < 0:
        raise DomainError("pump intensity must be non-negative")
    lam = system.lambda_pump
    return math.sqrt(3 * lam ** 3 * system.rate(2, 1) * I / (2 * math.pi * sc.h * sc.c))


def pump_broadened_width(I, system):
    """Saturation-broadened width of |2>, Gamma_2 sqrt(1 + I/I_s), in rad/s."""
    if I < 0:
        raise DomainError("pump intensity must be non-negative")
    s = I / saturation_intensity(system)
    return system.gamma2_natural * math.sqrt(1.0 + s)


def doppler_chain(Gamma2, system):
    """Velocity capture width, residual Doppler width and total dipole decay rate.

    Returns ``(delta_v, Gamma_D, Gamma)``: the full velocity window in m/s that
    the pump addresses, the Doppler width it leaves on the lasing line (rad/s),
    and Gamma_0 + Gamma_D.
    """
    if Gamma2 < 0:
        raise DomainError("Gamma2 must be non-negative")
    delta_v = Gamma2 / (2 * math.pi) * system.lambda_pump
    Gamma_D = 2 * math.pi * delta_v / system.lambda_lase
    return delta_v, Gamma_D, system.gamma0_lase + Gamma_D


def atoms_in_mode(T, cavity_mode, cfg):
    """Atoms inside the mode volume of the vapor cell, n'(T) pi L_cell w0^2 / 4."""
    return 0.25 * vapor_number_density(T) * math.pi * cfg.L_cell * cavity_mode.w0 ** 2


def _velocity_scale(T, system):
    return math.sqrt(system.atomic_mass / (2 * sc.k * T))


def effective_atom_number(N, delta_v, T, system):
    """Atoms whose axial velocity lies within +-delta_v/2 (1-D Maxwell distribution)."""
    if delta_v < 0:
        raise DomainError("delta_v must be non-negative")
    return N * float(erf(0.5 * delta_v * _velocity_scale(T, system)))


def effective_atom_number_quad(N, delta_v, T, system):
    """Same as :func:`effective_atom_number` by direct quadrature of the Maxwell density."""
    a = _velocity_scale(T, system)
    half = 0.5 * delta_v
    norm = a / math.sqrt(math.pi)
    val, _ = integrate.quad(lambda v: norm * math.exp(-(a * v) ** 2), -half, half,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return N * val


def coupling_constant(system, cavity_mode):
    """Single-atom coupling g = (mu/hbar) sqrt(hbar omega_0 / (2 eps0 V_c)) in rad/s."""
    if not cavity_mode.V_c > 0:
        raise DomainError("mode volume must be positive")
    omega0 = system.omega_lase
    field = math.sqrt(sc.hbar * omega0 / (2 * sc.epsilon_0 * cavity_mode.V_c))
    return system.dipole_moment / sc.hbar * field


def derive_gain(I, T, system, cavity_mode, cfg):
    """Run the full derivation for pump intensity ``I`` (W/m^2) and cell temperature ``T`` (K)."""
    Omega = rabi_frequency(I, system)
    Gamma2 = pump_broadened_width(I, system)
    delta_v, Gamma_D, Gamma = doppler_chain(Gamma2, system)
    N = atoms_in_mode(T, cavity_mode, cfg)
    N_eff = effective_atom_number(N, delta_v, T, system)
    g = coupling_constant(system, cavity_mode)
    return GainParams(Omega, Gamma2, delta_v, Gamma_D, Gamma, N, N_eff, g)
