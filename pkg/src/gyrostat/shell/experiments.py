"""Running scenarios, the named presets and their summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import dynamics as D
from ..core import SystemSetup
from ..errors import UnknownPreset, WindowEmpty
from ..stability import attainability, classify, fit_decay, fit_growth, growth_factor
from . import artifacts as io
from .scenario import OMEGA_DELTA, Scenario


def rigid_h1(dims, omega0) -> float:
    """``||grad (omega0 x x)||_2`` over the box, the scale for relative amplitudes."""
    return float(np.linalg.norm(omega0)) * math.sqrt(2.0 * float(np.prod(dims)))


# -- series post-processing --------------------------------------------------------------


def omega_deviation(series: D.TimeSeries, setup: SystemSetup) -> np.ndarray:
    """``|omega - omega_bar|`` where ``omega_bar`` is the permanent rotation in
    ``S(lam)`` carrying the same angular momentum, aligned with ``omega``."""
    out = []
    for row in series.rows:
        w = np.asarray(row.omega)
        par = setup.basis @ (setup.basis.T @ w)
        n = np.linalg.norm(par)
        bar = par / n * (row.M_norm / setup.lam) if n > 0 else par
        out.append(np.linalg.norm(w - bar))
    return np.array(out)


def perturbation_norm(series: D.TimeSeries) -> np.ndarray:
    """``sqrt(|v|^2 + |omega_perp|^2)`` with ``omega_perp`` relative to the reference axis."""
    l2 = series.column("l2v")
    perp = np.array([np.linalg.norm(r.omega_perp) for r in series.rows])
    return np.hypot(l2, perp)


def initial_attainability(state: D.State, setup: SystemSetup):
    row = D.diagnostics(state, setup)
    w_inf = np.asarray(state.M) / setup.inertia.diag
    return attainability(row.E, w_inf, *setup.inertia.moments, deg_tol=setup.inertia.deg_tol), row.E, w_inf


# -- running ---------------------------------------------------------------------------------


@dataclass
class RunResult:
    scenario: Scenario
    setup: SystemSetup
    series: D.TimeSeries
    summary: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


def summarize(sc: Scenario, setup: SystemSetup, series: D.TimeSeries, initial: D.State) -> dict:
    verdict = classify(*setup.inertia.moments, setup.omega0, deg_tol=setup.inertia.deg_tol)
    rows = series.rows
    M = np.array([r.M_norm for r in rows])
    doc = {
        "name": sc.name,
        "mode": sc.mode,
        "status": series.status,
        "case": verdict.case_id,
        "verdict": verdict.verdict,
        "lambda": verdict.lam,
        "m": verdict.m,
        "t_final": rows[-1].t,
        "steps": series.final_state.step if series.final_state is not None else 0,
        "omega_final": rows[-1].omega,
        "M_norm_rel_drift": float(np.max(np.abs(M / M[0] - 1.0))) if M[0] > 0 else 0.0,
        "energy_residual_max": max(series.residual_peak, float(np.max(np.abs(series.column("energy_residual"))))),
        "l2v_initial": rows[0].l2v,
        "l2v_final": rows[-1].l2v,
    }
    if sc.mode == D.NONLINEAR:
        att, E0, w_inf = initial_attainability(initial, setup)
        doc["attainability"] = str(att)
        doc["E0"] = E0
        doc["omega_inf0"] = w_inf
    t = series.t
    fits = {}
    if verdict.stable:
        for name, y in (("l2v", series.column("l2v")), ("omega_dev", omega_deviation(series, setup))):
            try:
                fits[name] = fit_decay(t, y, name).as_dict()
            except WindowEmpty as exc:
                fits[name] = {"error": str(exc)}
    else:
        y = perturbation_norm(series)
        doc["growth_factor"] = growth_factor(y)
        try:
            fits["perturbation"] = fit_growth(t, y, "perturbation").as_dict()
        except WindowEmpty as exc:
            fits["perturbation"] = {"error": str(exc)}
    doc["fits"] = fits
    return doc


def simulate(sc: Scenario, directory=None, state: D.State | None = None, stop=None) -> RunResult:
    """Run a scenario and write the requested artifacts to ``directory``."""
    setup = sc.setup()
    initial = state if state is not None else sc.initial_state(setup)
    out = Path(directory if directory is not None else sc.directory)
    files = []
    sink = None
    if "checkpoint" in sc.formats and sc.checkpoint_every:
        out.mkdir(parents=True, exist_ok=True)

        def sink(s, su):
            files.append(io.write_checkpoint(s, su, out / f"{sc.name}_{s.step:08d}.ckpt"))

    series = D.run(initial, setup, sc.run_config(stop), checkpoint_sink=sink,
                   coupling_sweeps=sc.coupling_sweeps)
    result = RunResult(sc, setup, series, files=files)
    if not sc.formats:
        return result
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in sc.formats:
        files.append(io.write_timeseries(series.rows, out / f"{sc.name}.csv"))
    if "plot" in sc.formats:
        files.extend(io.write_plot_files(series.rows, out / f"{sc.name}_plot"))
    if "summary" in sc.formats:
        result.summary = summarize(sc, setup, series, initial)
        files.append(io.write_json(result.summary, out / f"{sc.name}_summary.json"))
    if "checkpoint" in sc.formats and series.final_state is not None:
        files.append(io.write_checkpoint(series.final_state, setup, out / f"{sc.name}_final.ckpt"))
    return result


# -- presets -------------------------------------------------------------------------------

_BOX = (1.4, 1.4, 1.4)


def _preset_table() -> dict[str, Scenario]:
    h1 = rigid_h1(_BOX, (0.0, 0.0, 1.0))
    s = 1.0 / math.sqrt(2.0)
    formats = ("csv", "plot", "summary", "checkpoint")
    common = dict(dims=_BOX, grid=(16, 16, 16), nu=0.02, seed=3, omega=OMEGA_DELTA, formats=formats)
    return {
        # small perturbation of the spin about the axis of largest moment
        "kelvin-stable": Scenario(
            A=1.0, B=2.0, C=3.0, omega0=(0.0, 0.0, 1.0), t_end=45.0, sample_every=10,
            v_h1=0.01 * h1, delta=0.01, name="kelvin-stable", **common,
        ),
        # spin about the axis of smallest moment
        "kelvin-unstable": Scenario(
            A=1.0, B=2.0, C=3.0, omega0=(1.0, 0.0, 0.0), t_end=160.0, sample_every=20,
            v_h1=1e-4 * h1, delta=1e-4, name="kelvin-unstable", **common,
        ),
        # axisymmetric body spinning about an axis in the degenerate plane
        "soda-can": Scenario(
            A=1.0, B=1.0, C=3.0, omega0=(s, s, 0.0), t_end=120.0, sample_every=20,
            v_h1=1e-4 * h1, delta=1e-4, name="soda-can", **common,
        ),
        # large generic data relaxing to the spin about the largest axis
        "zhukovsky-longrun": Scenario(
            dims=_BOX, grid=(32, 32, 32), nu=0.02, A=1.0, B=2.0, C=3.0,
            omega0=(0.0, 0.0, 1.0), omega=(0.3, 0.3, 1.0), v_h1=h1, seed=11,
            t_end=60.0, sample_every=50, name="zhukovsky-longrun", formats=formats,
        ),
    }


PRESETS = tuple(_preset_table())


def preset(name: str) -> Scenario:
    table = _preset_table()
    if name not in table:
        raise UnknownPreset(f"unknown preset {name!r}; available: {', '.join(table)}")
    return table[name]


def run_preset(name: str, directory=None, **overrides) -> RunResult:
    """Run a named preset; keyword overrides replace scenario fields (e.g. ``grid``)."""
    sc = preset(name)
    if overrides:
        sc = sc.replace(**overrides)
    return simulate(sc, directory if directory is not None else Path(sc.directory) / name)
