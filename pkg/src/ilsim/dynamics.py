"""
Six-level density-matrix rate equations coupled to a mean-field photon number.

State vector layout (see :class:`SimState`)::

    [rho11, rho22, rho33, rho44, rho55, rho66, rho12_I, rho12_R, n]

The 3 -> 4 transition exchanges population with the cavity field through a
generalized Rabi factor; the photon number decays at eta * kappa0.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

__all__ = [
    "SimState",
    "ModelParams",
    "SteadyStateTimeout",
    "NumericalInstability",
    "vacuum_state",
    "rabi_factor",
    "derivatives",
    "residuals",
    "integrate_to_steady_state",
    "steady_state_photon_number",
    "population_snapshot",
]

N_VARS = 9
IDX_N = 8


@dataclass(frozen=True)
class SimState:
    rho: tuple
    rho12_I: float
    rho12_R: float
    n: float

    @classmethod
    def from_array(cls, y):
        y = np.asarray(y, dtype=float)
        return cls(tuple(float(v) for v in y[:6]), float(y[6]), float(y[7]), float(y[8]))

    def to_array(self):
        return np.array([*self.rho, self.rho12_I, self.rho12_R, self.n], dtype=float)

    @property
    def trace(self):
        return math.fsum(self.rho)

    @property
    def inversion(self):
        return self.rho[2] - self.rho[3]


def vacuum_state():
    """All atoms in |1>, no coherence, no photons."""
    return SimState((1.0, 0.0, 0.0, 0.0, 0.0, 0.0), 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ModelParams:
    """Everything the rate equations need, in SI units.

    ``literal_coherence`` switches the pump-coherence source term to the
    printed form ``(rho11 - rho12_I)`` instead of the population difference
    ``(rho11 - rho22)``; it exists only for comparison runs.

    ``population_rabi_time`` selects the time in the Rabi factor of the
    population equations. The default ``"t_int"`` matches the photon equation,
    so every emitted photon removes one unit of inversion from the N_eff
    atoms. ``"tau_cyc"`` reproduces the printed form, whose rapidly
    oscillating sin^2 makes the steady state multistable.
    """

    gain: object
    system: object
    eta: float
    kappa0: float
    N_eff: float
    Delta: float = 0.0
    delta_prime: float = 0.0
    literal_coherence: bool = False
    population_rabi_time: str = "t_int"
    tau_cyc: float = field(default=None)
    t_int: float = field(default=None)

    def __post_init__(self):
        if self.tau_cyc is None:
            object.__setattr__(self, "tau_cyc", self.system.tau_cyc)
        if self.t_int is None:
            object.__setattr__(self, "t_int", self.system.t_int)
        if not self.eta >= 1.0 - 1e-12:
            raise ValueError(f"loss coefficient must be >= 1, got {self.eta}")
        if not (self.tau_cyc > 0 and self.t_int > 0):
            raise ValueError("tau_cyc and t_int must be positive")
        if self.population_rabi_time not in ("t_int", "tau_cyc"):
            raise ValueError("population_rabi_time must be 't_int' or 'tau_cyc'")

    @property
    def g(self):
        return self.gain.g

    @property
    def Omega(self):
        return self.gain.Omega

    def with_(self, **changes):
        return replace(self, **changes)


class SteadyStateTimeout(RuntimeError):
    def __init__(self, message, state, residual):
        super().__init__(message)
        self.state = state
        self.residual = residual


class NumericalInstability(RuntimeError):
    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


def rabi_factor(n, g, Delta, t):
    """(2g sqrt(n+1) / W)^2 sin^2(W t / 2) with W = sqrt(Delta^2 + 4 g^2 (n+1))."""
    x = 4.0 * g * g * (n + 1.0)
    W2 = Delta * Delta + x
    W = math.sqrt(W2)
    return x / W2 * math.sin(0.5 * W * t) ** 2


def _rabi_factor_dn(n, g, Delta, t):
    x = 4.0 * g * g * (n + 1.0)
    W2 = Delta * Delta + x
    W = math.sqrt(W2)
    s = math.sin(0.5 * W * t)
    dF_dx = Delta * Delta / (W2 * W2) * s * s + x / W2 * t * math.sin(W * t) / (4.0 * W)
    return 4.0 * g * g * dF_dx


class _Rates:
    """Unpacked rate constants; built once per solve."""

    __slots__ = ("G21", "G23", "G25", "G34", "G36", "G41", "G54", "G56", "G61",
                 "Omega", "dp", "g", "Delta", "tau", "tint", "tpop", "Neff", "loss",
                 "literal")

    def __init__(self, p):
        r = p.system.rate
        self.G21, self.G23, self.G25 = r(2, 1), r(2, 3), r(2, 5)
        self.G34, self.G36, self.G41 = r(3, 4), r(3, 6), r(4, 1)
        self.G54, self.G56, self.G61 = r(5, 4), r(5, 6), r(6, 1)
        self.Omega = p.Omega
        self.dp = p.delta_prime
        self.g = p.g
        self.Delta = p.Delta
        self.tau = p.tau_cyc
        self.tint = p.t_int
        self.tpop = p.t_int if p.population_rabi_time == "t_int" else p.tau_cyc
        self.Neff = p.N_eff
        self.loss = p.eta * p.kappa0
        self.literal = p.literal_coherence


def _rhs(y, k):
    r11, r22, r33, r44, r55, r66, cI, cR, n = y
    nn = n if n > 0.0 else 0.0
    inv = r33 - r44
    stim = inv / k.tau * rabi_factor(nn, k.g, k.Delta, k.tpop)
    source = r11 - cI if k.literal else r11 - r22
    return np.array([
        -k.Omega * cI + k.G21 * r22 + k.G41 * r44 + k.G61 * r66,
        k.Omega * cI - (k.G21 + k.G23 + k.G25) * r22,
        k.G23 * r22 - (k.G34 + k.G36) * r33 - stim,
        k.G34 * r33 + k.G54 * r55 - k.G41 * r44 + stim,
        k.G25 * r22 - (k.G54 + k.G56) * r55,
        k.G36 * r33 + k.G56 * r55 - k.G61 * r66,
        0.5 * k.Omega * source + cR * k.dp - 0.5 * k.G21 * cI,
        -cI * k.dp - 0.5 * k.G21 * cR,
        k.Neff * inv / k.tau * rabi_factor(nn, k.g, k.Delta, k.tint) - k.loss * n,
    ])


def _jac(y, k):
    r33, r44, n = y[2], y[3], y[8]
    nn = n if n > 0.0 else 0.0
    inv = r33 - r44
    a_c = rabi_factor(nn, k.g, k.Delta, k.tpop) / k.tau
    da_c = _rabi_factor_dn(nn, k.g, k.Delta, k.tpop) / k.tau
    a_i = rabi_factor(nn, k.g, k.Delta, k.tint) / k.tau
    da_i = _rabi_factor_dn(nn, k.g, k.Delta, k.tint) / k.tau
    J = np.zeros((N_VARS, N_VARS))
    J[0, 1], J[0, 3], J[0, 5], J[0, 6] = k.G21, k.G41, k.G61, -k.Omega
    J[1, 1], J[1, 6] = -(k.G21 + k.G23 + k.G25), k.Omega
    J[2, 1], J[2, 2], J[2, 3], J[2, 8] = k.G23, -(k.G34 + k.G36) - a_c, a_c, -inv * da_c
    J[3, 2], J[3, 3], J[3, 4], J[3, 8] = k.G34 + a_c, -k.G41 - a_c, k.G54, inv * da_c
    J[4, 1], J[4, 4] = k.G25, -(k.G54 + k.G56)
    J[5, 2], J[5, 4], J[5, 5] = k.G36, k.G56, -k.G61
    if k.literal:
        J[6, 0], J[6, 6] = 0.5 * k.Omega, -0.5 * k.Omega - 0.5 * k.G21
    else:
        J[6, 0], J[6, 1], J[6, 6] = 0.5 * k.Omega, -0.5 * k.Omega, -0.5 * k.G21
    J[6, 7] = k.dp
    J[7, 6], J[7, 7] = -k.dp, -0.5 * k.G21
    J[8, 2], J[8, 3] = k.Neff * a_i, -k.Neff * a_i
    J[8, 8] = k.Neff * inv * da_i - k.loss
    return J


def derivatives(state, p):
    """Time derivative of ``state`` under ``p``, returned as a :class:`SimState`."""
    return SimState.from_array(_rhs(state.to_array(), _Rates(p)))


def _rate_scale(k):
    return max(k.Omega, k.G21 + k.G23 + k.G25, k.G34 + k.G36, k.G41, k.G61, 1.0 / k.tau)


def _residual_pair(y, k):
    d = _rhs(y, k)
    pop = float(np.max(np.abs(d[:8]))) / _rate_scale(k)
    phot = abs(float(d[8])) / (k.loss * max(float(y[8]), 1.0))
    return pop, phot


def residuals(state, p):
    """Dimensionless steady-state residuals ``(populations, photons)``.

    Populations: max |d rho / dt| divided by the fastest atomic rate.
    Photons: |dn/dt| / (eta kappa0 max(n, 1)).
    """
    return _residual_pair(state.to_array(), _Rates(p))


def _newton_polish(y, k):
    """Solve the algebraic steady state starting from ``y``.

    The rho11 equation is replaced by the trace constraint so the Jacobian is
    regular. Returns the refined vector or None when the solve fails.
    """
    nscale = max(float(y[8]), 1.0)
    rs = _rate_scale(k)
    pscale = k.loss * nscale

    def fun(x):
        yy = x.copy()
        yy[8] = x[8] * nscale
        d = _rhs(yy, k)
        d[0] = (math.fsum(yy[:6]) - 1.0) * rs
        d[:8] /= rs
        d[8] /= pscale
        return d

    def jac(x):
        yy = x.copy()
        yy[8] = x[8] * nscale
        J = _jac(yy, k)
        J[0, :] = 0.0
        J[0, :6] = rs
        J[:, 8] *= nscale
        J[:8] /= rs
        J[8] /= pscale
        return J

    x0 = np.array(y, dtype=float)
    x0[8] /= nscale
    sol = root(fun, x0, jac=jac, method="hybr", options={"xtol": 1e-14})
    if not np.all(np.isfinite(sol.x)):
        return None
    out = sol.x.copy()
    out[8] *= nscale
    return out


def integrate_to_steady_state(p, init=None, tol=1e-9, t_max=5e-3, first_chunk=2e-6):
    """Time-integrate from ``init`` (vacuum by default) until the residuals drop below ``tol``.

    Integration proceeds in doubling chunks with an implicit adaptive solver.
    Once the trajectory has settled to a coarse residual, the algebraic steady
    state is refined by Newton iteration; the refinement is accepted only if
    it stays next to the integrated point, so the attractor reached from the
    initial condition is preserved.

    Raises
    ------
    SteadyStateTimeout
        No converged state by ``t_max``.
    NumericalInstability
        NaN or a population below ``-tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    k = _Rates(p)
    y = (init or vacuum_state()).to_array()
    atol = np.full(N_VARS, 1e-13)
    t = 0.0
    chunk = first_chunk
    coarse = 1e-5
    best = (math.inf, y)
    while t < t_max:
        atol[IDX_N] = 1e-9 * max(1.0, abs(y[IDX_N]))
        sol = solve_ivp(lambda _t, v: _rhs(v, k), (t, t + chunk), y, method="LSODA",
                        jac=lambda _t, v: _jac(v, k), rtol=1e-9, atol=atol)
        if not sol.success:
            raise NumericalInstability(f"integrator failed: {sol.message}",
                                       SimState.from_array(y))
        y = sol.y[:, -1]
        t += chunk
        _check_finite(y, tol)
        res = max(_residual_pair(y, k))
        if res < best[0]:
            best = (res, y)
        if res < tol:
            return SimState.from_array(y)
        if res < coarse:
            z = _newton_polish(y, k)
            if z is not None and _close(z, y) and max(_residual_pair(z, k)) < tol:
                _check_finite(z, tol)
                return SimState.from_array(z)
        chunk *= 2.0
    raise SteadyStateTimeout(
        f"no steady state within t_max={t_max:g} s (residual {best[0]:.3e})",
        SimState.from_array(best[1]), best[0])


def _close(z, y):
    pops = np.max(np.abs(z[:8] - y[:8])) < 1e-4
    phot = abs(z[8] - y[8]) <= 1e-3 * max(abs(y[8]), 1.0)
    return pops and phot


def _check_finite(y, tol):
    state = SimState.from_array(y)
    if not np.all(np.isfinite(y)):
        raise NumericalInstability("non-finite state", state)
    if np.min(y[:6]) < -tol or y[IDX_N] < -max(tol, 1e-9 * abs(y[IDX_N])):
        raise NumericalInstability("negative population excursion", state)


def steady_state_photon_number(p, mode="full", tol=1e-9, **kwargs):
    """Converged photon number.

    ``mode="simplified"`` forces Delta = 0 (the plain rate equation);
    ``mode="full"`` keeps ``p.Delta``.
    """
    if mode == "simplified":
        p = p.with_(Delta=0.0)
    elif mode != "full":
        raise ValueError(f"unknown mode {mode!r}")
    return integrate_to_steady_state(p, tol=tol, **kwargs).n


def population_snapshot(p, tol=1e-9, state=None):
    """Steady-state level populations as ``{level_label: rho_ii}``."""
    if state is None:
        state = integrate_to_steady_state(p, tol=tol)
    return dict(zip(p.system.levels, state.rho))
