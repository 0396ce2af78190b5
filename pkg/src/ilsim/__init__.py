"""Steady-state simulator for a bad-cavity Cs laser with a tunable (resonant to anti-resonant) cavity."""

from .atomic_data import AtomicSystem, DomainError, default_system, load_atomic_system
from .cavity import CavityConfig, load_cavity_config, loss_coefficient, mode_from_geometry
from .scenario import Scenario

__version__ = "0.1.0"
