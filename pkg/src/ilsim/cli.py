"""
Command-line front end.

    ilsim simulate [--dphi PHI | --detuning-mhz MHZ] [--intensity-mw-mm2 I] [--temp-c T]
    ilsim figure NAME [--out DIR] [--workers K] [--format csv|jsonl]

Inputs are in lab units (mW/mm^2, degrees C, MHz) and converted to SI here.
Exit codes: 0 ok, 2 configuration error, 3 solver failure.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from .atomic_data import DomainError, load_atomic_system
from .cavity import detuning_to_phase, load_cavity_config, photon_lifetime
from .dynamics import NumericalInstability, SteadyStateTimeout, integrate_to_steady_state
from .gain import celsius, mw_per_mm2
from .observables import (LinewidthParams, UndefinedLinewidth, linewidth_general, output_power,
                          pulling_shift, selfconsistent_shift)
from .scenario import Scenario

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
ENV_CONFIG_DIR = "ILSIM_CONFIG_DIR"
ATOMIC_FILE = "cs_default.json"
CAVITY_FILE = "cavity_default.json"


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    atomic_path: str = None
    cavity_path: str = None
    intensity_mw_mm2: float = 10.0
    temperature_c: float = 100.0
    tol: float = 1e-9
    neff_mode: str = "recomputed"


def parse_phase(text):
    """Phase in radians; accepts plain numbers and multiples of pi ("pi", "0.5pi", "pi/2", "-3*pi/4")."""
    s = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([+-]?[0-9.e+-]*)\*?pi(?:/([0-9.]+))?", s)
    try:
        if m:
            coef = m.group(1)
            k = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
            return k * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse phase {text!r}") from None


def load_run_config(path=None):
    """Read a run config JSON; relative config paths resolve against its directory.

    Without ``path`` the atomic and cavity files are looked up in
    ``$ILSIM_CONFIG_DIR`` and otherwise taken from the packaged defaults.
    """
    env_dir = os.environ.get(ENV_CONFIG_DIR)
    cfg = {}
    root = None
    if path is not None:
        p = Path(path)
        try:
            cfg = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError(f"run config {path} must be a JSON object")
        root = p.parent
    elif env_dir:
        root = Path(env_dir)
        if not root.is_dir():
            raise ConfigError(f"{ENV_CONFIG_DIR}={env_dir} is not a directory")

    def resolve(key, default_name):
        val = cfg.get(key)
        if val is None and root is not None and (root / default_name).exists():
            val = default_name
        if val is None:
            return None
        q = Path(val)
        q = q if q.is_absolute() else root / q
        if not q.exists():
            raise ConfigError(f"{key}: {q} does not exist")
        return str(q)

    known = {"atomic_config", "cavity_config", "intensity_mW_mm2", "temperature_C", "tol", "neff_mode"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown run config keys {sorted(unknown)}")
    try:
        rc = RunConfig(
            atomic_path=resolve("atomic_config", ATOMIC_FILE),
            cavity_path=resolve("cavity_config", CAVITY_FILE),
            intensity_mw_mm2=float(cfg.get("intensity_mW_mm2", 10.0)),
            temperature_c=float(cfg.get("temperature_C", 100.0)),
            tol=float(cfg.get("tol", 1e-9)),
            neff_mode=str(cfg.get("neff_mode", "recomputed")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad run config value: {exc}") from exc
    if not rc.tol > 0:
        raise ConfigError("tol must be positive")
    return rc


def build_scenario(rc, delta_phi=0.0):
    try:
        system = load_atomic_system(rc.atomic_path)
        cavity = load_cavity_config(rc.cavity_path)
        return Scenario(system=system, cavity=cavity, intensity=mw_per_mm2(rc.intensity_mw_mm2),
                        temperature=celsius(rc.temperature_c), delta_phi=delta_phi,
                        neff_mode=rc.neff_mode)
    except (DomainError, ValueError, OSError, json.JSONDecodeError) as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(scenario, rc):
    """SHA-256 of the resolved configuration; stable across runs and machines."""
    payload = {
        "system": _plain(asdict(scenario.system)),
        "cavity": _plain(asdict(scenario.cavity)),
        "intensity_W_m2": scenario.intensity,
        "temperature_K": scenario.temperature,
        "neff_mode": scenario.neff_mode,
        "tol": rc.tol,
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _apply_overrides(rc, args):
    changes = {}
    if args.intensity_mw_mm2 is not None:
        changes["intensity_mw_mm2"] = args.intensity_mw_mm2
    if args.temp_c is not None:
        changes["temperature_c"] = args.temp_c
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("--tol must be positive")
        changes["tol"] = args.tol
    return RunConfig(**{**asdict(rc), **changes})


def cmd_simulate(args):
    rc = _apply_overrides(load_run_config(args.config), args)
    base = build_scenario(rc)
    if args.detuning_mhz is not None:
        phi = detuning_to_phase(2 * math.pi * args.detuning_mhz * 1e6, base.mode.FSR).delta_phi
    else:
        phi = args.dphi if args.dphi is not None else 0.0
    s = base.with_(delta_phi=phi)
    state = integrate_to_steady_state(s.params(), tol=rc.tol)
    mode = s.mode
    lw = LinewidthParams.thermal(s.gain, s.system)
    try:
        linewidth = linewidth_general(state, lw, mode.kappa0, s.eta)
    except UndefinedLinewidth:
        linewidth = None
    closed = pulling_shift(lw.Gamma, mode.finesse, phi)
    delta = selfconsistent_shift(s, phi, lw, state=state)[0] if state.n >= 1.0 else None
    report = {
        "delta_phi_rad": phi,
        "eta": s.eta,
        "tau_s": photon_lifetime(s.eta, mode.kappa0),
        "n": state.n,
        "populations": dict(zip(s.system.levels, state.rho)),
        "P_out_W": output_power(max(state.n, 0.0), s.eta, mode.kappa0, s.omega0,
                                s.cavity.coupling_fraction),
        "linewidth_Hz": linewidth,
        "Delta_rad_s": delta,
        "Delta_closed_form_rad_s": closed,
        "config_hash": config_hash(s, rc),
    }
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _write_table(path, cols, rows, fmt):
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        path.write_text(buf.getvalue(), newline="")
    else:
        text = "".join(json.dumps(dict(zip(cols, [_finite(v) for v in r]))) + "\n" for r in rows)
        path.write_text(text)


def _finite(v):
    return None if isinstance(v, float) and not math.isfinite(v) else v


def cmd_figure(args):
    from . import figures

    if args.name not in figures.FIGURES:
        raise ConfigError(f"unknown figure {args.name!r}; valid names: {', '.join(figures.FIGURES)}")
    rc = _apply_overrides(load_run_config(args.config), args)
    base = build_scenario(rc)
    ds = figures.build(args.name, base, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "csv" if args.format == "csv" else "jsonl"
    files = []
    for tname, (cols, rows) in sorted(ds.tables.items()):
        p = out / f"{tname}.{ext}"
        _write_table(p, cols, rows, args.format)
        files.append({"file": p.name, "columns": cols, "sha256": hashlib.sha256(p.read_bytes()).hexdigest()})
    manifest = {
        "figure": args.name,
        "config_hash": config_hash(base, rc),
        "tolerances": {"steady_state_residual": rc.tol, "pulling_fixed_point_Hz": 1e3},
        "files": files,
        "summary": _plain(ds.summary),
    }
    (out / f"{args.name}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if not args.no_plot:
        figures.render(ds, out / f"{args.name}.png")
    json.dump({"figure": args.name, "out": str(out), "summary": _plain(ds.summary)}, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config JSON (atomic_config, cavity_config, intensity_mW_mm2, ...)")
    common.add_argument("--intensity-mw-mm2", type=float, help="pump intensity in mW/mm^2")
    common.add_argument("--temp-c", type=float, help="vapor-cell temperature in C")
    common.add_argument("--tol", type=float, help="steady-state residual tolerance")

    parser = argparse.ArgumentParser(prog="ilsim", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="steady state at one cavity setting")
    g = sim.add_mutually_exclusive_group()
    g.add_argument("--dphi", type=parse_phase, help="round-trip phase: radians or multiples of pi, e.g. 'pi/2'")
    g.add_argument("--detuning-mhz", type=float, help="cavity detuning from the atomic line in MHz")
    sim.set_defaults(func=cmd_simulate)

    fig = sub.add_parser("figure", parents=[common], help="regenerate a figure or table dataset")
    fig.add_argument("name", help="fig2a, fig2b, fig2c, fig3b, expfig1..expfig5 or table1")
    fig.add_argument("--out", default="out", help="output directory")
    fig.add_argument("--workers", type=int, default=1)
    fig.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    fig.add_argument("--no-plot", action="store_true", help="skip the PNG")
    fig.set_defaults(func=cmd_figure)
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ilsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SteadyStateTimeout, NumericalInstability) as exc:
        print(f"ilsim: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
