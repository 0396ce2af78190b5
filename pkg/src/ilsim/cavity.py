"""
Passive Fabry-Perot resonator: mode geometry, emission enhancement and the
detuning-dependent loss coefficient.

The round-trip phase ``delta_phi`` is the detuning coordinate used everywhere
in the package; frequency detunings are converted once via
:func:`detuning_to_phase`.
"""

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import constants as sc

from .atomic_data import DomainError

__all__ = [
    "CavityConfig",
    "CavityMode",
    "PhaseShift",
    "load_cavity_config",
    "mode_from_geometry",
    "emission_ratio",
    "loss_coefficient",
    "photon_lifetime",
    "detuning_to_phase",
    "reflectivity_finesse",
]

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class CavityConfig:
    """Plano-concave cavity geometry. Lengths in metres."""

    L: float = 0.190
    r: float = 0.500
    R1: float = 0.345
    R2: float = 0.345
    L_cell: float = 0.10
    kappa0_measured: float = None  # rad/s; overrides the mirror-loss estimate
    finesse_override: float = None
    coupling_fraction: float = 0.5
    wavelength: float = 1470e-9

    def __post_init__(self):
        if not (0 < self.L < self.r):
            raise DomainError(f"need 0 < L < r for a stable cavity, got L={self.L}, r={self.r}")
        for name in ("R1", "R2"):
            R = getattr(self, name)
            if not (0 < R < 1):
                raise DomainError(f"{name}={R} must lie in (0, 1)")
        if not (0 < self.L_cell <= self.L):
            raise DomainError(f"L_cell={self.L_cell} must lie in (0, L]")
        if not (0 < self.coupling_fraction <= 1):
            raise DomainError("coupling_fraction must lie in (0, 1]")

    def with_reflectivity(self, R):
        """Same geometry with both mirrors set to ``R``.

        A measured kappa0 is rescaled by the ratio of mirror-loss estimates so the
        shipped reflectivity keeps its measured value; a finesse override is dropped.
        """
        new = replace(self, R1=R, R2=R, finesse_override=None, kappa0_measured=None)
        if self.kappa0_measured is None:
            return new
        scale = self.kappa0_measured / _mirror_kappa0(self)
        return replace(new, kappa0_measured=scale * _mirror_kappa0(new))


@dataclass(frozen=True)
class CavityMode:
    w_s1: float
    w_s2: float
    w0: float
    V_c: float
    FSR: float
    kappa0: float
    finesse: float
    kappa0_mirrors: float

    @property
    def eta_max(self):
        return 1.0 + (2 * self.finesse / math.pi) ** 2


@dataclass(frozen=True)
class PhaseShift:
    """Round-trip phase, kept modulo 2 pi with an integer winding count."""

    delta_phi: float
    winding: int = 0

    @classmethod
    def from_value(cls, phi):
        winding = math.floor(phi / TWO_PI)
        reduced = phi - winding * TWO_PI
        if reduced < 0:  # phi / 2 pi underflowed to -0.0
            reduced += TWO_PI
            winding -= 1
        if reduced >= TWO_PI:  # guards floor rounding at exact multiples
            reduced -= TWO_PI
            winding += 1
        return cls(reduced + 0.0, winding)

    @property
    def total(self):
        return self.delta_phi + TWO_PI * self.winding

    def is_resonant(self, atol=1e-12):
        d = self.delta_phi
        return min(d, TWO_PI - d) <= atol

    def is_antiresonant(self, atol=1e-12):
        return abs(self.delta_phi - math.pi) <= atol

    def __float__(self):
        return self.delta_phi


def _phase_value(phi):
    return float(phi) if isinstance(phi, PhaseShift) else phi


def load_cavity_config(path=None):
    if path is None:
        text = resources.files("ilsim.data").joinpath("cavity_default.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        raw = json.loads(text)
        k0 = raw.get("kappa0_MHz_over_2pi")
        return CavityConfig(
            L=raw["L_mm"] * 1e-3,
            r=raw["r_mm"] * 1e-3,
            R1=float(raw["R1"]),
            R2=float(raw["R2"]),
            L_cell=raw["L_cell_mm"] * 1e-3,
            kappa0_measured=None if k0 is None else TWO_PI * k0 * 1e6,
            finesse_override=raw.get("finesse_override"),
            coupling_fraction=float(raw.get("coupling_fraction", 0.5)),
        )
    except DomainError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise DomainError(f"malformed cavity config: {exc!r}") from exc


def _mirror_kappa0(cfg):
    # exact round-trip intensity loss rate; -> (1 - R1 R2) c / 2L for R -> 1
    return -math.log(cfg.R1 * cfg.R2) * sc.c / (2 * cfg.L)


def mode_from_geometry(cfg):
    """Derive the TEM00 mode and resonator rates for a plano-concave cavity.

    ``w_s1`` is the spot on the curved mirror and ``w_s2`` the waist on the
    flat mirror, matching the ordering of the reference values (0.429 mm,
    0.337 mm). The mode volume uses the mean of the two spots.
    """
    g = 1.0 - cfg.L / cfg.r
    if not (0.0 < g < 1.0):
        raise DomainError(f"unstable resonator, 1 - L/r = {g}")
    scale = cfg.L * cfg.wavelength / math.pi
    w_flat = math.sqrt(scale * math.sqrt(g / (1.0 - g)))
    w_curved = math.sqrt(scale * math.sqrt(1.0 / (g * (1.0 - g))))
    w0 = 0.5 * (w_curved + w_flat)
    V_c = 0.25 * cfg.L * math.pi * w0 ** 2
    fsr = sc.c / (2 * cfg.L)
    kappa_mirrors = _mirror_kappa0(cfg)
    kappa0 = cfg.kappa0_measured if cfg.kappa0_measured is not None else kappa_mirrors
    finesse = fsr / (kappa0 / TWO_PI)
    if cfg.finesse_override is not None:
        finesse = float(cfg.finesse_override)
    return CavityMode(w_curved, w_flat, w0, V_c, fsr, kappa0, finesse, kappa_mirrors)


def reflectivity_finesse(R):
    """Lossless-mirror finesse pi sqrt(R) / (1 - R)."""
    return math.pi * np.sqrt(R) / (1.0 - R)


def emission_ratio(R, phi):
    """Power radiated into the cavity relative to free space for mirror reflectivity R."""
    R = np.asarray(R, dtype=float)
    if np.any(R < 0) or np.any(R >= 1):
        raise DomainError(f"reflectivity must satisfy 0 <= R < 1, got {R}")
    dphi = np.asarray(_phase_value(phi), dtype=float)
    # 1 + R^2 - 2R cos(dphi) written without cancellation near R -> 1
    out = (1 - R) * (1 + R) / ((1 - R) ** 2 + 4 * R * np.sin(dphi / 2) ** 2)
    return float(out) if out.ndim == 0 else out


def loss_coefficient(finesse, phi):
    """eta = 1 + (2F/pi)^2 sin^2(dphi/2); 1 on resonance, maximal at anti-resonance."""
    if not finesse > 0:
        raise DomainError("finesse must be positive")
    dphi = np.asarray(_phase_value(phi), dtype=float)
    out = 1.0 + (2 * finesse / math.pi) ** 2 * np.sin(dphi / 2) ** 2
    return float(out) if out.ndim == 0 else out


def photon_lifetime(eta, kappa0):
    return 1.0 / (eta * kappa0)


def detuning_to_phase(cavity_detuning, fsr):
    """Convert a cavity detuning omega_c - omega_0 (rad/s) to a round-trip phase.

    ``fsr`` is in Hz; a detuning of one FSR (2 pi FSR rad/s) maps to 2 pi.
    """
    if not fsr > 0:
        raise DomainError("FSR must be positive")
    return PhaseShift.from_value(cavity_detuning / fsr)
