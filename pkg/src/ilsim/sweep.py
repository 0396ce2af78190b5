"""
One-dimensional parameter sweeps, threshold extraction and dataset export.

Every grid point is an independent steady-state solve started from the
vacuum state, so results do not depend on execution order or on the number
of worker processes.
"""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .atomic_data import DomainError, vapor_number_density
from .dynamics import NumericalInstability, SteadyStateTimeout, integrate_to_steady_state, residuals
from .observables import (LinewidthParams, UndefinedLinewidth, linewidth_general, output_power,
                          selfconsistent_shift)
from .scenario import Scenario

__all__ = [
    "VARIABLES",
    "OUTPUTS",
    "SweepSpec",
    "SweepRecord",
    "ThresholdResult",
    "ThresholdNotFound",
    "run_sweep",
    "solve_point",
    "find_threshold",
    "export",
    "read_csv",
]

# variable name -> (unit, scenario setter)
VARIABLES = {
    "delta_phi": ("rad", lambda s, x: s.with_(delta_phi=x)),
    "pump_intensity": ("W/m^2", lambda s, x: s.with_(intensity=x)),
    "cell_temperature": ("K", lambda s, x: s.with_(temperature=x)),
    "reflectivity": ("1", lambda s, x: s.with_(cavity=s.cavity.with_reflectivity(x))),
}
OUTPUTS = ("n", "P_out", "linewidth", "pulling")

COLUMNS = {
    "x": None,
    "n": "1",
    "P_out": "W",
    "Delta": "rad/s",
    "linewidth": "Hz",
    "converged": "bool",
    "residual": "1",
    "error": "",
}


class ThresholdNotFound(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """Grid ``linspace(lo, hi, count)`` over ``variable`` around the ``base`` operating point.

    Values are SI (phase in rad, intensity in W/m^2, temperature in K).
    """

    variable: str
    lo: float
    hi: float
    count: int
    base: Scenario = field(default_factory=Scenario)
    outputs: tuple = ("n", "P_out")
    tol: float = 1e-9

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise DomainError(f"unknown sweep variable {self.variable!r}; choose from {sorted(VARIABLES)}")
        if self.count < 2:
            raise DomainError("a sweep needs count >= 2")
        if not self.lo < self.hi:
            raise DomainError(f"empty range: lo={self.lo} must be below hi={self.hi}")
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise DomainError(f"unknown outputs {sorted(bad)}")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.variable == "pump_intensity" and self.lo < 0:
            raise DomainError("pump intensity must be non-negative")
        if self.variable == "reflectivity" and not (0 < self.lo and self.hi < 1):
            raise DomainError("reflectivity must lie in (0, 1)")
        if self.variable == "cell_temperature":
            vapor_number_density(self.lo)
            vapor_number_density(self.hi)

    @property
    def grid(self):
        return np.linspace(self.lo, self.hi, self.count)

    @property
    def unit(self):
        return VARIABLES[self.variable][0]

    def scenario_at(self, x):
        return VARIABLES[self.variable][1](self.base, float(x))


@dataclass(frozen=True)
class SweepRecord:
    x: float
    n: float = math.nan
    P_out: float = math.nan
    Delta: float = math.nan
    linewidth: float = math.nan
    converged: bool = False
    residual: float = math.nan
    error: str = ""


def solve_point(scenario, outputs=("n", "P_out"), tol=1e-9, x=None):
    """Steady state and requested observables at one operating point; never raises on solver failure."""
    x = scenario.delta_phi if x is None else x
    try:
        state = integrate_to_steady_state(scenario.params(), tol=tol)
    except (SteadyStateTimeout, NumericalInstability) as exc:
        best = getattr(exc, "state", None)
        return SweepRecord(x=x, n=best.n if best is not None else math.nan,
                           residual=getattr(exc, "residual", math.nan), error=str(exc))
    res = max(residuals(state, scenario.params()))
    row = {"x": x, "n": state.n, "converged": True, "residual": res}
    mode = scenario.mode
    if "P_out" in outputs:
        row["P_out"] = output_power(max(state.n, 0.0), scenario.eta, mode.kappa0,
                                    scenario.omega0, scenario.cavity.coupling_fraction)
    if "linewidth" in outputs:
        lw = LinewidthParams.thermal(scenario.gain, scenario.system)
        try:
            row["linewidth"] = linewidth_general(state, lw, mode.kappa0, scenario.eta)
        except UndefinedLinewidth:
            pass
    if "pulling" in outputs and state.n >= 1.0:
        lw = LinewidthParams.thermal(scenario.gain, scenario.system)
        try:
            row["Delta"] = selfconsistent_shift(scenario, scenario.delta_phi, lw, state=state)[0]
        except (RuntimeError, ValueError) as exc:
            row["error"] = str(exc)
    return SweepRecord(**row)


def _task(args):
    spec, x = args
    return solve_point(spec.scenario_at(x), spec.outputs, spec.tol, x=float(x))


def run_sweep(spec, workers=1):
    """Solve every grid point; rows come back in grid order whatever ``workers`` is."""
    jobs = [(spec, x) for x in spec.grid]
    if workers <= 1:
        return [_task(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


@dataclass(frozen=True)
class ThresholdResult:
    """Zero crossing of the line fitted to the upper half of the curve, plus the knee point."""

    value: float
    knee: float
    slope: float
    intercept: float


def find_threshold(x, y):
    """Threshold of a pump curve ``y(x)`` (typically output power).

    A straight line is fitted to the points in the upper half of the x range
    and its zero crossing is returned. The knee, where the discrete second
    difference peaks, is returned as a definition-independent check.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < 4:
        raise ThresholdNotFound("need at least four finite points")
    order = np.argsort(x)
    x, y = x[order], y[order]
    scale = np.max(np.abs(y))
    if scale == 0:
        raise ThresholdNotFound("curve is identically zero; no lasing in range")
    d2 = np.diff(y, 2)
    if not np.any(d2 > 1e-9 * scale) or y[0] > 0.05 * scale:
        raise ThresholdNotFound("no below-to-above threshold transition in range")
    upper = x >= x[0] + 0.5 * (x[-1] - x[0])
    slope, intercept = np.polyfit(x[upper], y[upper], 1)
    if not slope > 0:
        raise ThresholdNotFound("upper branch does not rise")
    knee = x[1 + int(np.argmax(d2))]
    return ThresholdResult(float(-intercept / slope), float(knee), float(slope), float(intercept))


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export(records, path, fmt="csv", variable="x", unit=None):
    """Write records as CSV or JSON lines plus a ``<name>.schema.json`` sidecar.

    Floats are written with ``repr`` so the files round-trip exactly and are
    byte-identical for identical inputs.
    """
    path = Path(path)
    names = [f.name for f in fields(SweepRecord)]
    try:
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\r\n")
            w.writerow(names)
            for r in records:
                w.writerow([_format(getattr(r, k)) for k in names])
            path.write_text(buf.getvalue(), newline="")
        elif fmt == "jsonl":
            lines = [json.dumps({k: _json_value(v) for k, v in asdict(r).items()}) for r in records]
            path.write_text("".join(line + "\n" for line in lines))
        else:
            raise ValueError(f"unknown format {fmt!r}")
        units = dict(COLUMNS, x=unit)
        schema = {"format": fmt, "variable": variable,
                  "columns": [{"name": k, "unit": units[k]} for k in names]}
        schema_path = path.with_name(path.stem + ".schema.json")
        schema_path.write_text(json.dumps(schema, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
    return path


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def read_csv(path):
    """Parse a CSV written by :func:`export` back into records."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(SweepRecord(
                x=float(row["x"]), n=float(row["n"]), P_out=float(row["P_out"]),
                Delta=float(row["Delta"]), linewidth=float(row["linewidth"]),
                converged=row["converged"] == "true", residual=float(row["residual"]),
                error=row["error"]))
    return out
