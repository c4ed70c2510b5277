"""One-command reproduction of the reference figures against a target table."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import io as qio
from .config import ExperimentConfig
from .exciton import SpinBranch, branch_energy, branch_splitting
from .fitkit.fits import (
    TWO_LEVEL,
    V_SYSTEM,
    fit_anticrossing,
    fit_zeeman,
    rabi_vs_field,
    zeeman_branches,
)
from .fitkit.tracking import detect_anticrossing, find_anticrossings
from .polariton import g_from_splitting, resonance_field
from .spectrum import sweep_exciton, sweep_magnetic, sweep_temperature
from .units import energy_to_detuning_nm

FIGURES = ("fig1b", "fig2a", "fig2b", "fig3a", "fig3b")


@dataclass(frozen=True)
class Target:
    figure: str
    quantity: str
    lower: Optional[float]
    upper: Optional[float]
    reference: Optional[float]
    note: str

    def check(self, value: float) -> Optional[bool]:
        """True/False against the bounds, None for informational rows."""
        if self.lower is None and self.upper is None:
            return None
        ok = value is not None and math.isfinite(value)
        if ok and self.lower is not None:
            ok = value >= self.lower
        if ok and self.upper is not None:
            ok = value <= self.upper
        return bool(ok)


@dataclass(frozen=True)
class Comparison:
    target: Target
    value: float
    passed: Optional[bool]

    @property
    def status(self) -> str:
        return {True: "PASS", False: "FAIL", None: "INFO"}[self.passed]


def _opt(text: str) -> Optional[float]:
    return float(text) if text.strip() else None


def load_targets(text: Optional[str] = None) -> List[Target]:
    if text is None:
        text = resources.files("qdcavity").joinpath("data/targets.csv").read_text(encoding="utf-8")
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(Target(row["figure"], row["quantity"], _opt(row["lower"]), _opt(row["upper"]),
                          _opt(row["reference"]), row["note"]))
    return out


# -- figure drivers -------------------------------------------------------------
# Each returns (measured quantities, {file name: file text}).

def _fig1b(cfg: ExperimentConfig):
    exc = replace(cfg.exciton, E0=cfg.dot_energy(cfg.sweep_temperature))
    B = cfg.grid("B")
    shifts = [branch_energy(exc, br, B.max()) - exc.E0 for br in SpinBranch]
    lo, hi = min(shifts + [0.0]), max(shifts + [0.0])
    margin = 3.0 * max(cfg.resolution, exc.gamma_x) + 100.0
    step = min(1.0, cfg.resolution / 10.0) if cfg.resolution > 0 else 1.0
    E = exc.E0 + np.arange(lo - margin, hi + margin + step / 2, step)
    sweep = sweep_exciton(exc, B, E, cfg.resolution)
    rows = zeeman_branches(sweep)
    fit = fit_zeeman(rows)
    fitted = replace(exc, E0=fit["E0"], g_diff=fit["g_diff"], gamma2=fit["gamma2"])
    b_top = 7.0
    values = {
        "g_diff": fit["g_diff"],
        "gamma2_ueV_per_T2": fit["gamma2"],
        "shift_plus_7T_meV": (branch_energy(fitted, SpinBranch.PLUS_ONE, b_top) - fitted.E0) / 1000.0,
        "shift_minus_7T_meV": (branch_energy(fitted, SpinBranch.MINUS_ONE, b_top) - fitted.E0) / 1000.0,
        "split_1T_nm": energy_to_detuning_nm(branch_splitting(fitted, 1.0), cfg.reference_wavelength_nm),
    }
    report = {k: float(v) for k, v in fit.params.items()}
    report.update({f"{k}_stderr": float(v) for k, v in fit.stderr.items()})
    files = {
        "fig1b_branches.csv": qio.zeeman_to_csv(rows),
        "fig1b_map.csv": qio.sweep_to_csv(sweep),
        "fig1b_fit.txt": qio.format_report(report),
    }
    return values, files


def _fig2(cfg: ExperimentConfig, name: str, temperature: float, branch: SpinBranch, grid):
    exc = replace(cfg.exciton, E0=cfg.dot_energy(temperature))
    sweep = sweep_magnetic(exc, cfg.cavity, cfg.coupling, grid, cfg.energy_grid(),
                           cfg.emphasis, cfg.resolution, temperature)
    ac = detect_anticrossing(sweep, branch)
    values = {
        "resonance_field_T": resonance_field(exc, branch, cfg.cavity),
        "min_gap_frame_T": float(sweep.tuning[ac.frame]),
    }
    return values, {f"{name}_map.csv": qio.sweep_to_csv(sweep)}


def _fig2a(cfg):
    return _fig2(cfg, "fig2a", 34.0, SpinBranch.PLUS_ONE, np.linspace(1.5, 3.3, 7))


def _fig2b(cfg):
    return _fig2(cfg, "fig2b", 41.0, SpinBranch.MINUS_ONE, np.linspace(1.8, 3.6, 7))


def _resonance_temperature(cfg: ExperimentConfig, branch: SpinBranch, B: float) -> float:
    shift = branch_energy(cfg.exciton, branch, B) - cfg.exciton.E0
    return cfg.temperature_tuning.temperature_for(cfg.cavity.Ec - shift)


def _tmap(cfg: ExperimentConfig, B: float, T_grid):
    return sweep_temperature(cfg.exciton, cfg.temperature_tuning, cfg.cavity, cfg.coupling, T_grid,
                             cfg.energy_grid(), B, cfg.emphasis, cfg.resolution)


def _fig3a(cfg):
    T = cfg.grid("T")
    m0 = _tmap(cfg, 0.0, T)
    ac0 = detect_anticrossing(m0)
    fit0 = fit_anticrossing(m0, TWO_LEVEL)
    m1 = _tmap(cfg, 1.0, T)
    values = {"gap_0T_ueV": ac0.min_gap, "g_0T_ueV": fit0["g"],
              "resonance_temperature_0T_K": ac0.tuning_value_at_min}
    found = find_anticrossings(m1)
    for br, key in ((SpinBranch.PLUS_ONE, "plus"), (SpinBranch.MINUS_ONE, "minus")):
        tr = _resonance_temperature(cfg, br, 1.0)
        fit = fit_anticrossing(m1, V_SYSTEM, tuning_window=(tr - 2.5, tr + 2.5))
        values[f"g_{key}_1T_ueV"] = fit[f"g_{key}"]
        near = min(found, key=lambda f: abs(f[1] - tr)) if found else None
        values[f"gap_{key}_1T_ueV"] = near[0] if near else math.nan
    files = {"fig3a_map_0T.csv": qio.sweep_to_csv(m0), "fig3a_map_1T.csv": qio.sweep_to_csv(m1)}
    return values, files


def _fig3b(cfg):
    fields = np.arange(1.0, 7.5, 1.0)
    series = []
    for B in fields:
        gaps = []
        for br in (SpinBranch.PLUS_ONE, SpinBranch.MINUS_ONE):
            tr = _resonance_temperature(cfg, br, float(B))
            found = find_anticrossings(_tmap(cfg, float(B), np.arange(tr - 4.0, tr + 4.001, 0.1)))
            gaps.append(min(found, key=lambda f: abs(f[1] - tr))[0] if found else math.nan)
        series.append((float(B), *gaps))
    gc, gx = cfg.cavity.gamma_c, cfg.exciton.gamma_x
    g0 = g_from_splitting(detect_anticrossing(_tmap(cfg, 0.0, cfg.grid("T"))).min_gap, gc, gx)
    table = rabi_vs_field(series, gc, gx, g0)

    def spread(g):
        return float(np.ptp(g) / np.mean(g))

    values = {
        "spread_plus": spread(table.g_plus),
        "spread_minus": spread(table.g_minus),
        "reduction_plus": table.reduction_plus,
        "reduction_minus": table.reduction_minus,
    }
    lines = ["B_T,g_plus_ueV,g_minus_ueV,gap_plus_ueV,gap_minus_ueV"]
    for (B, gp, gm), (_, dp, dm) in zip(table.rows(), series):
        lines.append(",".join(repr(float(v)) for v in (B, gp, gm, dp, dm)))
    lines.append(f"0.0,{g0!r},{g0!r},,")
    return values, {"fig3b_couplings.csv": "\n".join(lines) + "\n"}


DRIVERS: Dict[str, Callable] = {
    "fig1b": _fig1b,
    "fig2a": _fig2a,
    "fig2b": _fig2b,
    "fig3a": _fig3a,
    "fig3b": _fig3b,
}


def run_figure(figure: str, cfg: ExperimentConfig, targets: Optional[List[Target]] = None):
    """Run one figure; returns (comparisons, files)."""
    if figure not in DRIVERS:
        raise KeyError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    values, files = DRIVERS[figure](cfg)
    targets = [t for t in (targets or load_targets()) if t.figure == figure]
    comps = []
    for t in targets:
        v = values.get(t.quantity, math.nan)
        v = math.nan if v is None else float(v)
        comps.append(Comparison(t, v, t.check(v)))
    return comps, files


def comparison_csv(comps: List[Comparison]) -> str:
    def f(x):
        return "" if x is None else repr(float(x))

    lines = ["figure,quantity,value,lower,upper,reference,status"]
    for c in comps:
        t = c.target
        lines.append(",".join([t.figure, t.quantity, repr(c.value), f(t.lower), f(t.upper),
                               f(t.reference), c.status]))
    return "\n".join(lines) + "\n"


def comparison_text(comps: List[Comparison]) -> str:
    rows = []
    for c in comps:
        t = c.target
        if t.lower is None and t.upper is None:
            bounds = "-"
        else:
            bounds = f"[{'' if t.lower is None else f'{t.lower:g}'}, {'' if t.upper is None else f'{t.upper:g}'}]"
        ref = "" if t.reference is None else f"{t.reference:g}"
        rows.append(f"{c.status:4s}  {t.figure:5s}  {t.quantity:28s} {c.value:14.6g}  {bounds:22s} {ref}")
    return "\n".join(rows) + "\n"


def write_bundle(out_dir, figure: str, comps: List[Comparison], files: Dict[str, str]) -> List[Path]:
    out = Path(out_dir)
    written = []
    for name, text in {**files, f"{figure}_comparison.csv": comparison_csv(comps)}.items():
        qio.atomic_write_text(out / name, text)
        written.append(out / name)
    return written
