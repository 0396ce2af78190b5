"""Operating point: configs plus pump/vapor/detuning knobs, resolved into ModelParams."""

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

from .atomic_data import default_system
from .cavity import load_cavity_config, loss_coefficient, mode_from_geometry
from .dynamics import ModelParams
from .gain import GainParams, derive_gain

__all__ = ["Scenario", "REFERENCE_N_EFF", "NEFF_MODES"]

# Effective atom number quoted for 10 mW/mm^2 and 100 C.
REFERENCE_N_EFF = 5.71e9
NEFF_MODES = ("recomputed", "fixed")


@dataclass(frozen=True)
class Scenario:
    """One operating point.

    ``neff_mode="recomputed"`` derives N_eff from intensity and temperature at
    every point; ``"fixed"`` pins it to ``n_eff_fixed`` while the Rabi
    frequency still follows the intensity.
    """

    system: object = field(default_factory=default_system)
    cavity: object = field(default_factory=load_cavity_config)
    intensity: float = 1e4  # W/m^2
    temperature: float = 373.15  # K
    delta_phi: float = 0.0
    Delta: float = 0.0
    delta_prime: float = 0.0
    neff_mode: str = "recomputed"
    n_eff_fixed: float = REFERENCE_N_EFF
    literal_coherence: bool = False
    population_rabi_time: str = "t_int"

    def __post_init__(self):
        if self.neff_mode not in NEFF_MODES:
            raise ValueError(f"neff_mode must be one of {NEFF_MODES}")

    def with_(self, **changes):
        return replace(self, **changes)

    @cached_property
    def mode(self):
        return mode_from_geometry(self.cavity)

    @cached_property
    def gain(self):
        gp = derive_gain(self.intensity, self.temperature, self.system, self.mode, self.cavity)
        if self.neff_mode == "fixed":
            gp = GainParams(**{**gp.__dict__, "N_eff": self.n_eff_fixed})
        return gp

    @property
    def eta(self):
        return loss_coefficient(self.mode.finesse, self.delta_phi)

    @property
    def omega0(self):
        return 2 * math.pi * 299792458.0 / self.system.lambda_lase

    def params(self, Delta=None):
        return ModelParams(
            gain=self.gain,
            system=self.system,
            eta=self.eta,
            kappa0=self.mode.kappa0,
            N_eff=self.gain.N_eff,
            Delta=self.Delta if Delta is None else Delta,
            delta_prime=self.delta_prime,
            literal_coherence=self.literal_coherence,
            population_rabi_time=self.population_rabi_time,
        )
