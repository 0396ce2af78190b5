"""
Quantities derived from a steady state or from closed-form expressions:
output power, the quantum-limited linewidth family, the xi broadening
coefficient and cavity pulling.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as sc

from .cavity import loss_coefficient
from .dynamics import integrate_to_steady_state
from .specfun import erfc_cf_tail, erfcx

__all__ = [
    "UndefinedLinewidth",
    "PullingNotConverged",
    "LinewidthParams",
    "PullingResult",
    "output_power",
    "xi_coefficient",
    "spontaneous_emission_factor",
    "linewidth_general",
    "linewidth_cavity_modified",
    "linewidth_power_independent",
    "linewidth_homogeneous",
    "pulling_shift",
    "pulling_slope",
    "pulling_coefficient_table",
    "pulling_selfconsistent",
    "selfconsistent_shift",
]

# Population and polarization decay rates of the 1470 nm pair (rad/s).
GAMMA_E = 17.6e6
GAMMA_G = 32.4e6
GAMMA_EG = 11.4e6
COLD_TEMPERATURE = 200e-6  # K


class UndefinedLinewidth(ValueError):
    """Raised when the lasing transition is not inverted."""


class PullingNotConverged(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def output_power(n, eta, kappa0, omega0, coupling_fraction=0.5):
    """Power leaving through the output coupler, hbar omega0 n eta kappa0 times the coupled fraction."""
    if n < 0:
        raise ValueError("photon number must be non-negative")
    if not 0 < coupling_fraction <= 1:
        raise ValueError("coupling_fraction must lie in (0, 1]")
    return sc.hbar * omega0 * n * eta * kappa0 * coupling_fraction


def xi_coefficient(alpha, beta):
    """Broadening coefficient between the Doppler (xi -> 0) and homogeneous (xi -> 1) limits.

    ``xi = 2 z exp(-z^2) / (sqrt(pi) erfc(z)) - 2 z^2`` with ``z = beta / alpha``.
    For z >= 2 the erfc continued fraction gives ``xi = 2 z K(z)`` directly,
    which avoids subtracting two numbers of size 2 z^2.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not beta >= 1:
        raise ValueError("beta must be >= 1")
    z = beta / alpha
    if z >= 2.0:
        return 2.0 * z * erfc_cf_tail(z)
    return 2.0 * z / (math.sqrt(math.pi) * erfcx(z)) - 2.0 * z * z


def spontaneous_emission_factor(rho_e, rho_g):
    """N_sp = N_e / (N_e - N_g); the common atom number cancels."""
    if not rho_e > rho_g:
        raise UndefinedLinewidth(f"no inversion on the lasing transition (rho_e={rho_e:.6g}, rho_g={rho_g:.6g})")
    return rho_e / (rho_e - rho_g)


@dataclass(frozen=True)
class LinewidthParams:
    """Rates entering the linewidth formulas (rad/s).

    ``Gamma`` is the dipole decay rate in the prefactor and ``g`` the
    single-atom coupling, which sets the saturation photon number.
    """

    Gamma: float
    g: float
    Delta_omega_D: float
    Gamma_e: float = GAMMA_E
    Gamma_g: float = GAMMA_G
    Gamma_eg: float = GAMMA_EG

    def __post_init__(self):
        for name in ("Gamma", "g", "Delta_omega_D", "Gamma_e", "Gamma_g", "Gamma_eg"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def thermal(cls, gain, system):
        """Vapor-cell preset: Doppler width of the velocity class picked out by the pump."""
        dw = 0.5 * gain.delta_v * 2 * math.pi / system.lambda_lase
        return cls(Gamma=gain.Gamma, g=gain.g, Delta_omega_D=dw)

    @classmethod
    def cold(cls, gain, system, temperature=COLD_TEMPERATURE):
        """Laser-cooled preset: thermal Doppler width at ``temperature`` and Gamma = Gamma_eg."""
        dw = system.omega_lase * math.sqrt(2 * sc.k * temperature / (system.atomic_mass * sc.c ** 2))
        return cls(Gamma=GAMMA_EG, g=gain.g, Delta_omega_D=dw)

    @property
    def alpha(self):
        return 2.0 * self.Delta_omega_D / self.Gamma_eg

    @property
    def n_s(self):
        return self.Gamma_eg / (4.0 * self.g ** 2) * self.Gamma_e * self.Gamma_g / (self.Gamma_e + self.Gamma_g)

    def beta(self, n):
        return math.sqrt(1.0 + n / self.n_s)

    def xi(self, n):
        return xi_coefficient(self.alpha, self.beta(n))

    def _bracket_coeff(self, xi):
        ge, gg = self.Gamma_e, self.Gamma_g
        return ((1 - xi) * gg + 2 * (1 + xi) * ge) / (4 * (ge + gg))


def _unpack(state):
    if state.n <= 0:
        raise UndefinedLinewidth("photon number must be positive")
    return state.n, spontaneous_emission_factor(state.rho[2], state.rho[3])


def linewidth_general(state, lw, kappa0, eta):
    """Bad-cavity quantum-limited linewidth in Hz.

    ``(Gamma^2 / 4 pi n kappa0) N_sp [1/xi^2 + c(xi) n / (xi^2 n_s)] / eta``
    with populations and n taken from ``state``.
    """
    n, nsp = _unpack(state)
    xi = lw.xi(n)
    bracket = 1.0 / xi ** 2 + lw._bracket_coeff(xi) / xi ** 2 * n / lw.n_s
    return lw.Gamma ** 2 / (4 * math.pi * n * kappa0) * nsp * bracket / eta


def linewidth_cavity_modified(state, lw, kappa0, eta):
    """Same linewidth without the bad-cavity approximation, keeping (G' / (G' + kappa))^2."""
    n, nsp = _unpack(state)
    xi = lw.xi(n)
    kappa = eta * kappa0
    gp = lw.Gamma / xi
    return kappa / (4 * math.pi * n) * (gp / (gp + kappa)) ** 2 * nsp * (1.0 + lw._bracket_coeff(xi) * n / lw.n_s)


def linewidth_power_independent(state, lw, kappa0, eta):
    """Large-n form of :func:`linewidth_general`; n enters only through xi."""
    n, nsp = _unpack(state)
    xi = lw.xi(n)
    return lw.Gamma ** 2 / (4 * math.pi * kappa0) * nsp * lw._bracket_coeff(xi) / (xi ** 2 * lw.n_s) / eta


def linewidth_homogeneous(state, lw, kappa0, eta):
    """Homogeneous-limit linewidth, ``(Gamma^2/4 pi n kappa0) N_sp (1 + Ge/(Ge+Gg) n/n_s) / eta``."""
    n, nsp = _unpack(state)
    ratio = lw.Gamma_e / (lw.Gamma_e + lw.Gamma_g)
    return lw.Gamma ** 2 / (4 * math.pi * n * kappa0) * nsp * (1.0 + ratio * n / lw.n_s) / eta


def _sin_phase(phi):
    # sin reduced about the nearest multiple of pi, so sin(k pi) is exactly 0
    k = np.rint(phi / math.pi)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    return sign * np.sin(phi - k * math.pi)


def pulling_shift(Gamma, finesse, phi):
    """Lasing-frequency shift (rad/s) for round-trip phase ``phi``.

    ``(Gamma/4) (2F/pi)^2 sin(phi) / (1 + (2F/pi)^2 sin^2(phi/2))``; zero on
    resonance and at anti-resonance.
    """
    if not Gamma > 0:
        raise ValueError("Gamma must be positive")
    phi = np.asarray(phi if isinstance(phi, np.ndarray) else float(phi), dtype=float)
    a = (2 * finesse / math.pi) ** 2
    out = 0.25 * Gamma * a * _sin_phase(phi) / (1.0 + a * np.sin(0.5 * phi) ** 2) + 0.0  # no -0.0
    return float(out) if out.ndim == 0 else out


def pulling_slope(Gamma, kappa0, finesse, phi):
    """Analytic d(shift)/d(omega_c) of :func:`pulling_shift`, dimensionless.

    The phase advances by 2 pi per free spectral range, FSR = kappa0 F / 2 pi.
    """
    a = (2 * finesse / math.pi) ** 2
    s, c = math.sin(phi), math.cos(phi)
    h = math.sin(0.5 * phi) ** 2
    d_dphi = 0.25 * Gamma * a * (c * (1 + a * h) - s * a * 0.5 * s) / (1 + a * h) ** 2
    fsr_rad = kappa0 * finesse  # 2 pi FSR
    return d_dphi * 2 * math.pi / fsr_rad


def pulling_coefficient_table(Gamma, kappa0, finesse):
    """Stimulated-emission pulling coefficients: Gamma/kappa0 and -(pi/2F)^2 Gamma/kappa0."""
    if not (Gamma > 0 and kappa0 > 0 and finesse > 0):
        raise ValueError("inputs must be positive")
    r = Gamma / kappa0
    return {
        "resonant_stimulated": r,
        "antiresonant_stimulated": -(math.pi / (2 * finesse)) ** 2 * r,
    }


@dataclass(frozen=True)
class PullingResult:
    """Self-consistent shift and slope, with the plain closed-form values alongside."""

    Delta: float
    P: float
    Delta_closed_form: float
    P_closed_form: float
    n: float
    iterations: int
    history: tuple = field(default=(), repr=False)


def _stimulated_shift(Gamma_eff, finesse, phi):
    # mode-pulling shift of the stimulated field: the atomic response
    # Gamma_eff sees the cavity through the field amplitude, 1/sqrt(eta)
    eta = loss_coefficient(finesse, phi)
    return 0.25 * Gamma_eff * (2 * finesse / math.pi) * float(_sin_phase(phi)) / math.sqrt(eta) + 0.0


def _effective_gamma(closure, lw, n):
    if closure == "xi":
        return lw.Gamma / lw.xi(n)
    if closure == "power_broadened":
        return lw.Gamma * lw.beta(n)
    raise ValueError(f"unknown closure {closure!r}")


def selfconsistent_shift(scenario, phi, lw=None, closure="xi", tol=2 * math.pi * 1e3, max_iter=100,
                         state=None):
    """Fixed point of shift and photon number at one phase.

    Returns ``(Delta, state, iterations, history)``; ``history`` lists the
    ``(Delta, n)`` iterates.
    """
    if lw is None:
        lw = LinewidthParams.thermal(scenario.gain, scenario.system)
    sc_phi = scenario.with_(delta_phi=phi)
    finesse = sc_phi.mode.finesse
    Delta = 0.0
    history = []
    for it in range(1, max_iter + 1):
        state = integrate_to_steady_state(sc_phi.params(Delta=Delta), init=state)
        if state.n < 1.0:
            raise ValueError(f"below threshold at phi={phi:g} (n={state.n:.3g})")
        G = _effective_gamma(closure, lw, state.n)
        if closure == "xi":
            new = _stimulated_shift(G, finesse, phi)
        else:
            new = pulling_shift(G, finesse, phi)
        history.append((Delta, state.n))
        if abs(new - Delta) < tol:
            return new, state, it, tuple(history)
        Delta = new
    raise PullingNotConverged(f"no fixed point after {max_iter} iterations at phi={phi:g}", tuple(history))


def pulling_selfconsistent(scenario, phi=None, lw=None, closure="xi", h=1e-3,
                           tol=2 * math.pi * 1e3, max_iter=100):
    """Pulling shift iterated against the steady-state photon number.

    Each step solves the rate equations with the current shift as the
    atom-field detuning, updates the effective dipole width from the new
    photon number, and re-evaluates the shift. The slope ``P`` is a
    symmetric difference of converged shifts over ``+-h`` in phase, divided
    by one FSR per 2 pi.

    ``closure="xi"`` uses Gamma/xi(n) as the atomic width and the
    stimulated-field factor 1/sqrt(eta); ``"power_broadened"`` inserts
    Gamma sqrt(1 + n/n_s) into the closed-form shift instead.
    """
    phi = scenario.delta_phi if phi is None else float(phi)
    if lw is None:
        lw = LinewidthParams.thermal(scenario.gain, scenario.system)
    Delta, state, its, hist = selfconsistent_shift(scenario, phi, lw, closure, tol, max_iter)
    # the +-h neighbours start from the centre state; small steps keep them on its branch
    d_plus = selfconsistent_shift(scenario, phi + h, lw, closure, tol, max_iter, state)[0]
    d_minus = selfconsistent_shift(scenario, phi - h, lw, closure, tol, max_iter, state)[0]
    mode = scenario.mode
    fsr_rad = 2 * math.pi * mode.FSR
    P = (d_plus - d_minus) / (2 * h) * 2 * math.pi / fsr_rad
    return PullingResult(
        Delta=Delta,
        P=P,
        Delta_closed_form=pulling_shift(lw.Gamma, mode.finesse, phi),
        P_closed_form=pulling_slope(lw.Gamma, mode.kappa0, mode.finesse, phi),
        n=state.n,
        iterations=its,
        history=hist,
    )
