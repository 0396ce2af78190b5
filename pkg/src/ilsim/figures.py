"""
Datasets behind each reproduced figure and table, and their PNG rendering.

Each builder takes a base :class:`Scenario` and a worker count and returns a
:class:`Dataset`: named tables (column names plus rows) and a summary dict of
headline numbers. Rendering is kept separate so datasets can be produced and
tested without a display.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cavity import photon_lifetime
from .dynamics import integrate_to_steady_state
from .gain import celsius, derive_gain, mw_per_mm2
from .observables import (LinewidthParams, UndefinedLinewidth, linewidth_general,
                          linewidth_homogeneous, linewidth_power_independent, output_power,
                          pulling_coefficient_table, pulling_selfconsistent, pulling_shift,
                          pulling_slope, selfconsistent_shift)
from .sweep import SweepSpec, ThresholdNotFound, find_threshold, run_sweep

__all__ = ["Dataset", "FIGURES", "build", "render"]

TWO_PI = 2 * math.pi
PHASE_POINTS = 37


@dataclass
class Dataset:
    name: str
    tables: dict = field(default_factory=dict)  # name -> (columns, rows)
    summary: dict = field(default_factory=dict)


def _pmap(fn, items, workers):
    items = list(items)
    if workers <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _phase_grid(count=PHASE_POINTS):
    return np.linspace(0.0, TWO_PI, count)


def _state(scenario):
    return integrate_to_steady_state(scenario.params())


def _power(scenario, n):
    return output_power(max(n, 0.0), scenario.eta, scenario.mode.kappa0, scenario.omega0,
                        scenario.cavity.coupling_fraction)


def _threshold_summary(x, p, scale):
    try:
        th = find_threshold(x, p)
    except ThresholdNotFound as exc:
        return {"threshold": None, "knee": None, "error": str(exc)}
    return {"threshold": th.value * scale, "knee": th.knee * scale}


# ---- fig2a: lifetime and power vs phase -------------------------------------

def _row_fig2a(s):
    st = _state(s)
    return [s.delta_phi, s.eta, photon_lifetime(s.eta, s.mode.kappa0), st.n, _power(s, st.n)]


def fig2a(base, workers=1):
    rows = _pmap(_row_fig2a, [base.with_(delta_phi=float(x)) for x in _phase_grid(73)], workers)
    n = [r[3] for r in rows]
    return Dataset("fig2a", {"fig2a": (["delta_phi_rad", "eta", "tau_s", "n", "P_out_W"], rows)},
                   {"n_resonant": n[0], "n_antiresonant": n[36], "eta_max": rows[36][1]})


# ---- fig2b / fig2c: phase curves at several pump settings, threshold curves --

def _pump_figure(name, base, workers, variable, values, thr_lo, thr_hi, thr_count, to_si, from_si, label):
    phase_rows = []
    for v in values:
        spec = SweepSpec("delta_phi", 0.0, TWO_PI, PHASE_POINTS, base=_set(base, variable, to_si(v)))
        for r in run_sweep(spec, workers):
            phase_rows.append([v, r.x, r.n, r.P_out])
    tables = {f"{name}_phase": ([label, "delta_phi_rad", "n", "P_out_W"], phase_rows)}
    summary = {}
    for tag, phi in (("resonant", 0.0), ("antiresonant", math.pi)):
        spec = SweepSpec(variable, to_si(thr_lo), to_si(thr_hi), thr_count, base=base.with_(delta_phi=phi))
        recs = run_sweep(spec, workers)
        x = [from_si(r.x) for r in recs]
        tables[f"{name}_{tag}"] = ([label, "n", "P_out_W"], [[xi, r.n, r.P_out] for xi, r in zip(x, recs)])
        summary[tag] = _threshold_summary(x, [r.P_out for r in recs], 1.0)
    return Dataset(name, tables, summary)


def _set(base, variable, value):
    return base.with_(intensity=value) if variable == "pump_intensity" else base.with_(temperature=value)


def fig2b(base, workers=1):
    return _pump_figure("fig2b", base, workers, "pump_intensity", [2.0, 4.0, 6.0, 8.0, 10.0],
                        0.0, 10.0, 41, mw_per_mm2, lambda v: v / 1e3, "I_mW_per_mm2")


def fig2c(base, workers=1):
    return _pump_figure("fig2c", base, workers, "cell_temperature", [80.0, 90.0, 100.0, 110.0, 120.0],
                        60.0, 110.0, 51, celsius, lambda v: v - 273.15, "T_C")


# ---- fig3b: self-consistent pulling at 120 C ---------------------------------

FIG3B_TEMPERATURE = celsius(120.0)


def _row_fig3b(s):
    lw = LinewidthParams.thermal(s.gain, s.system)
    closed = pulling_shift(lw.Gamma, s.mode.finesse, s.delta_phi)
    try:
        delta = selfconsistent_shift(s, s.delta_phi, lw)[0]
    except ValueError:
        delta = math.nan
    return [s.delta_phi, s.delta_phi * s.mode.FSR / TWO_PI / 1e6, delta / TWO_PI / 1e6, closed / TWO_PI / 1e6]


def fig3b(base, workers=1):
    hot = base.with_(temperature=FIG3B_TEMPERATURE)
    rows = _pmap(_row_fig3b, [hot.with_(delta_phi=float(x)) for x in _phase_grid(73)], workers)
    slopes = _pmap(_slope_at, [(hot, 0.0), (hot, math.pi)], workers)
    res, anti = slopes
    return Dataset("fig3b", {"fig3b": (["delta_phi_rad", "cavity_detuning_MHz", "shift_MHz",
                                        "shift_closed_form_MHz"], rows)},
                   {"P_resonant": res, "P_antiresonant": anti, "ratio": abs(res / anti)})


def _slope_at(args):
    s, phi = args
    return pulling_selfconsistent(s, phi).P


# ---- table1 ------------------------------------------------------------------

def table1(base, workers=1):
    mode = base.mode
    G = base.gain.Gamma
    formulas = pulling_coefficient_table(G, mode.kappa0, mode.finesse)
    exact = [pulling_slope(G, mode.kappa0, mode.finesse, p) for p in (0.0, math.pi)]
    sim = fig3b(base, workers).summary
    rows = [
        ["formula", formulas["resonant_stimulated"], formulas["antiresonant_stimulated"]],
        ["closed_form_slope", exact[0], exact[1]],
        ["selfconsistent_120C", sim["P_resonant"], sim["P_antiresonant"]],
    ]
    summary = {"formula_resonant": rows[0][1], "formula_antiresonant": rows[0][2],
               "slope_resonant": exact[0], "slope_antiresonant": exact[1],
               "selfconsistent_resonant": sim["P_resonant"],
               "selfconsistent_antiresonant": sim["P_antiresonant"]}
    return Dataset("table1", {"table1": (["kind", "resonant", "antiresonant"], rows)}, summary)


# ---- expfig1: populations vs phase ------------------------------------------

def _row_pop(s):
    st = _state(s)
    return [s.delta_phi, *st.rho, st.n]


def expfig1(base, workers=1):
    rows = _pmap(_row_pop, [base.with_(delta_phi=float(x)) for x in _phase_grid()], workers)
    cols = ["delta_phi_rad"] + [f"rho{i}{i}" for i in range(1, 7)] + ["n"]
    return Dataset("expfig1", {"expfig1": (cols, rows)},
                   {"inversion_resonant": rows[0][3] - rows[0][4],
                    "inversion_antiresonant": rows[18][3] - rows[18][4]})


# ---- expfig2: n with and without the atom-field detuning ---------------------

def _row_expfig2(s):
    n0 = integrate_to_steady_state(s.params(Delta=0.0)).n
    try:
        Delta, state, _, _ = selfconsistent_shift(s, s.delta_phi)
        n1 = state.n
    except ValueError:  # below threshold: no lasing line to pull
        Delta, n1 = 0.0, n0
    return [s.delta_phi, Delta, n0, n1, n1 - n0]


def expfig2(base, workers=1):
    rows = _pmap(_row_expfig2, [base.with_(delta_phi=float(x)) for x in _phase_grid()], workers)
    return Dataset("expfig2", {"expfig2": (["delta_phi_rad", "Delta_rad_s", "n_Delta0", "n_full",
                                            "difference"], rows)},
                   {"difference_resonant": rows[0][4], "difference_antiresonant": rows[18][4],
                    "max_abs_difference": max(abs(r[4]) for r in rows)})


# ---- expfig3: effective atom number and Rabi frequency -----------------------

def expfig3(base, workers=1):
    mode = base.mode
    a_rows = []
    for I in np.linspace(0.0, 10.0, 41):
        gp = derive_gain(mw_per_mm2(I), base.temperature, base.system, mode, base.cavity)
        a_rows.append([float(I), gp.N_eff, gp.Omega])
    b_rows = []
    for T in np.linspace(60.0, 120.0, 61):
        gp = derive_gain(base.intensity, celsius(T), base.system, mode, base.cavity)
        b_rows.append([float(T), gp.N_eff])
    return Dataset("expfig3", {"expfig3a": (["I_mW_per_mm2", "N_eff", "Omega_per_s"], a_rows),
                               "expfig3b": (["T_C", "N_eff"], b_rows)},
                   {"N_eff_default": base.gain.N_eff, "Omega_default": base.gain.Omega})


# ---- expfig4: reflectivity scan ----------------------------------------------

EXPFIG4_REFLECTIVITIES = (0.345, 0.5, 0.65, 0.8)


def expfig4(base, workers=1):
    rows = []
    summary = {}
    for R in EXPFIG4_REFLECTIVITIES:
        b = base.with_(cavity=base.cavity.with_reflectivity(R))
        recs = run_sweep(SweepSpec("delta_phi", 0.0, TWO_PI, PHASE_POINTS, base=b), workers)
        rows += [[R, r.x, r.n] for r in recs]
        summary[f"R={R}"] = {"finesse": b.mode.finesse, "n_resonant": recs[0].n,
                             "n_antiresonant": recs[PHASE_POINTS // 2].n}
    return Dataset("expfig4", {"expfig4": (["R", "delta_phi_rad", "n"], rows)}, summary)


# ---- expfig5: quantum-limited linewidth vs phase -----------------------------

def _row_expfig5(s):
    st = _state(s)
    k0 = s.mode.kappa0
    thermal = LinewidthParams.thermal(s.gain, s.system)
    cold = LinewidthParams.cold(s.gain, s.system)
    try:
        vals = [linewidth_general(st, thermal, k0, s.eta),
                linewidth_power_independent(st, thermal, k0, s.eta),
                linewidth_homogeneous(st, cold, k0, s.eta)]
    except UndefinedLinewidth:
        vals = [math.nan] * 3
    return [s.delta_phi, st.n, *vals]


def expfig5(base, workers=1):
    rows = _pmap(_row_expfig5, [base.with_(delta_phi=float(x)) for x in _phase_grid()], workers)
    res, anti = rows[0], rows[PHASE_POINTS // 2]
    return Dataset("expfig5", {"expfig5": (["delta_phi_rad", "n", "thermal_Hz", "thermal_large_n_Hz",
                                            "cold_Hz"], rows)},
                   {"thermal_resonant_Hz": res[2], "thermal_antiresonant_Hz": anti[2],
                    "cold_resonant_Hz": res[4], "cold_antiresonant_Hz": anti[4]})


FIGURES = {
    "fig2a": fig2a,
    "fig2b": fig2b,
    "fig2c": fig2c,
    "fig3b": fig3b,
    "expfig1": expfig1,
    "expfig2": expfig2,
    "expfig3": expfig3,
    "expfig4": expfig4,
    "expfig5": expfig5,
    "table1": table1,
}


def build(name, base, workers=1):
    if name not in FIGURES:
        raise KeyError(name)
    return FIGURES[name](base, workers)


# ---- rendering ----------------------------------------------------------------

def _columns(table):
    cols, rows = table
    arr = np.array([[np.nan if v is None else v for v in r] for r in rows], dtype=float)
    return {c: arr[:, i] for i, c in enumerate(cols)}


def _grouped(ax, table, key, xcol, ycol, fmt="{:g}"):
    d = _columns(table)
    for v in np.unique(d[key]):
        m = d[key] == v
        ax.plot(d[xcol][m], d[ycol][m], label=fmt.format(v))


def render(ds, path):
    """Draw a dataset to ``path`` (PNG) with the non-interactive Agg backend."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = ds.tables
    name = ds.name
    if name in ("fig2b", "fig2c", "expfig3"):
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    else:
        fig, ax = plt.subplots(figsize=(6, 4))
        axes = [ax]

    if name == "fig2a":
        d = _columns(t["fig2a"])
        ax = axes[0]
        ax.plot(d["delta_phi_rad"], d["P_out_W"] * 1e6, color="tab:blue")
        ax.set_ylabel("P_out (uW)")
        ax2 = ax.twinx()
        ax2.plot(d["delta_phi_rad"], d["tau_s"] * 1e9, "k.", ms=3)
        ax2.set_ylabel("photon lifetime (ns)")
        ax.set_xlabel("phase shift (rad)")
    elif name in ("fig2b", "fig2c"):
        label = "I_mW_per_mm2" if name == "fig2b" else "T_C"
        _grouped(axes[0], t[f"{name}_phase"], label, "delta_phi_rad", "P_out_W")
        axes[0].set_xlabel("phase shift (rad)")
        axes[0].set_ylabel("P_out (W)")
        axes[0].legend(title=label, fontsize=7)
        for tag, c in (("resonant", "tab:blue"), ("antiresonant", "tab:orange")):
            d = _columns(t[f"{name}_{tag}"])
            axes[1].plot(d[label], d["P_out_W"], color=c, label=tag)
            th = ds.summary[tag].get("threshold")
            if th is not None and d[label].min() <= th <= d[label].max():
                axes[1].axvline(th, color=c, ls=":")
        axes[1].set_xlabel(label)
        axes[1].legend(fontsize=7)
    elif name == "fig3b":
        d = _columns(t["fig3b"])
        ax = axes[0]
        ax.plot(d["cavity_detuning_MHz"], d["shift_MHz"] * 1e3, label="self-consistent")
        ax.plot(d["cavity_detuning_MHz"], d["shift_closed_form_MHz"] * 1e3, "--", label="closed form")
        ax.set_xlabel("cavity detuning (MHz)")
        ax.set_ylabel("frequency shift (kHz)")
        ax.legend(fontsize=7)
    elif name == "table1":
        ax = axes[0]
        cols, rows = t["table1"]
        ax.axis("off")
        ax.table(cellText=[[r[0], f"{r[1]:.4f}", f"{r[2]:.4f}"] for r in rows], colLabels=cols, loc="center")
    elif name == "expfig1":
        d = _columns(t["expfig1"])
        for i in range(1, 7):
            axes[0].plot(d["delta_phi_rad"], d[f"rho{i}{i}"], label=f"rho{i}{i}")
        axes[0].set_yscale("log")
        axes[0].set_xlabel("phase shift (rad)")
        axes[0].legend(fontsize=7)
    elif name == "expfig2":
        d = _columns(t["expfig2"])
        axes[0].plot(d["delta_phi_rad"], d["n_Delta0"], "r-", label="Delta = 0")
        axes[0].plot(d["delta_phi_rad"], d["n_full"], "g:", label="Delta from pulling")
        axes[0].set_xlabel("phase shift (rad)")
        axes[0].set_ylabel("n")
        axes[0].legend(fontsize=7)
        inset = axes[0].inset_axes([0.35, 0.55, 0.3, 0.3])
        inset.plot(d["delta_phi_rad"], d["difference"], "k-")
    elif name == "expfig3":
        a, b = _columns(t["expfig3a"]), _columns(t["expfig3b"])
        axes[0].plot(a["I_mW_per_mm2"], a["N_eff"])
        axes[0].set_xlabel("I (mW/mm^2)")
        axes[0].set_ylabel("N_eff")
        tw = axes[0].twinx()
        tw.plot(a["I_mW_per_mm2"], a["Omega_per_s"], color="tab:red")
        tw.set_ylabel("Omega (1/s)")
        axes[1].plot(b["T_C"], b["N_eff"])
        axes[1].set_xlabel("T (C)")
        axes[1].set_yscale("log")
    elif name == "expfig4":
        _grouped(axes[0], t["expfig4"], "R", "delta_phi_rad", "n")
        axes[0].set_xlabel("phase shift (rad)")
        axes[0].set_ylabel("n")
        axes[0].legend(title="R", fontsize=7)
    elif name == "expfig5":
        d = _columns(t["expfig5"])
        axes[0].plot(d["delta_phi_rad"], d["thermal_Hz"], "ks:", ms=3, label="thermal")
        axes[0].plot(d["delta_phi_rad"], d["cold_Hz"], "b:", label="cold")
        axes[0].set_yscale("log")
        axes[0].set_xlabel("phase shift (rad)")
        axes[0].set_ylabel("linewidth (Hz)")
        axes[0].legend(fontsize=7)
    fig.suptitle(name)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
