"""Command-line entry point.

Exit codes: 0 success, 2 input or configuration error, 3 fit did not
converge, 4 a reproduction target was missed.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import io as qio
from .config import ConfigError, Grid, load_config
from .exciton import SpinBranch, branch_energy
from .fitkit.fits import TWO_LEVEL, V_SYSTEM, FitError, fit_anticrossing, fit_zeeman, zeeman_branches
from .fitkit.tracking import NoAntiCrossing, detect_anticrossing
from .reproduce import FIGURES, comparison_text, run_figure, write_bundle
from .spectrum import AxisKind, add_noise, sweep_exciton, sweep_magnetic, sweep_temperature

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_TARGET = 4

AXES = {"B": AxisKind.MAGNETIC_FIELD, "T": AxisKind.TEMPERATURE}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _range(text: str):
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}") from None
    if not b > a:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return a, b


def _grid(text: str) -> Grid:
    try:
        a, b, n = text.split(":")
        return Grid(float(a), float(b), int(n))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP:NUM, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qdcavity", description="Quantum dot / cavity polariton simulator and fitter.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", type=Path, default=None,
                        help="YAML configuration (default: packaged reference set)")
        sp.add_argument("--seed", type=int, default=None, help="override the configured seed")

    z = sub.add_parser("simulate-zeeman", help="spin-branch energies versus field")
    common(z)
    z.add_argument("--out", type=Path, required=True, help="CSV of B_T,E_plus_ueV,E_minus_ueV")
    z.add_argument("--map", type=Path, default=None, help="also write the bare-dot emission map here")
    z.add_argument("--unit", choices=sorted(qio.UNIT_COLUMNS), default="ueV", help="unit of --map")

    s = sub.add_parser("simulate-sweep", help="spectra versus field (B) or temperature (T)")
    common(s)
    s.add_argument("--axis", choices=sorted(AXES), required=True)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--unit", choices=sorted(qio.UNIT_COLUMNS), default="ueV")
    s.add_argument("--grid", type=_grid, default=None, help="tuning grid START:STOP:NUM")
    s.add_argument("--field", type=float, default=None, help="fixed field for --axis T")
    s.add_argument("--temperature", type=float, default=None, help="fixed temperature for --axis B")

    f = sub.add_parser("fit", help="fit a sweep CSV or a branch table")
    f.add_argument("input", type=Path)
    f.add_argument("--mode", choices=("zeeman", "anticrossing"), required=True)
    f.add_argument("--axis", choices=sorted(AXES), default="T", help="tuning axis of the sweep")
    f.add_argument("--model", choices=(TWO_LEVEL, V_SYSTEM), default=TWO_LEVEL)
    f.add_argument("--window", type=_range, default=None, help="tuning window LOW:HIGH")
    f.add_argument("--gamma-x", type=float, default=1.0, help="fixed exciton linewidth (ueV)")
    f.add_argument("--out", type=Path, default=None, help="also write the report here")

    r = sub.add_parser("reproduce", help="rerun a reference figure and compare with its targets")
    common(r)
    r.add_argument("figure", help=f"one of {', '.join(FIGURES)}")
    r.add_argument("--out", type=Path, default=Path("reproduce_out"))
    return p


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _noisy(cfg, sweep):
    if cfg.noise.model == "none":
        return sweep
    return add_noise(sweep, cfg.noise.model, cfg.noise.scale, cfg.seed)


def cmd_simulate_zeeman(args) -> int:
    cfg = _config(args)
    exc = replace(cfg.exciton, E0=cfg.dot_energy(cfg.sweep_temperature))
    B = cfg.grid("B")
    rows = [(float(b), branch_energy(exc, SpinBranch.PLUS_ONE, float(b)),
             branch_energy(exc, SpinBranch.MINUS_ONE, float(b))) for b in B]
    qio.atomic_write_text(args.out, qio.zeeman_to_csv(rows))
    if args.map is not None:
        lo = min(r[1] for r in rows) - exc.E0
        hi = max(r[2] for r in rows) - exc.E0
        margin = 3.0 * max(cfg.resolution, exc.gamma_x) + 100.0
        E = exc.E0 + np.arange(lo - margin, hi + margin + 0.5, 1.0)
        qio.write_sweep_csv(_noisy(cfg, sweep_exciton(exc, B, E, cfg.resolution)), args.map, args.unit)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_simulate_sweep(args) -> int:
    cfg = _config(args)
    if args.grid is not None:
        if args.grid.num < 1:
            raise ConfigError("--grid needs at least one point")
        cfg = replace(cfg, grids={**cfg.grids, args.axis: args.grid})
    grid = cfg.grid(args.axis)
    if args.axis == "B":
        temp = cfg.sweep_temperature if args.temperature is None else args.temperature
        if np.any(grid < 0):
            raise ConfigError("grids.B must be non-negative")
        exc = replace(cfg.exciton, E0=cfg.dot_energy(temp))
        sweep = sweep_magnetic(exc, cfg.cavity, cfg.coupling, grid, cfg.energy_grid(),
                               cfg.emphasis, cfg.resolution, temp)
    else:
        field = cfg.sweep_field if args.field is None else args.field
        if field < 0:
            raise ConfigError("sweep.field must be >= 0")
        sweep = sweep_temperature(cfg.exciton, cfg.temperature_tuning, cfg.cavity, cfg.coupling, grid,
                                  cfg.energy_grid(), field, cfg.emphasis, cfg.resolution)
    qio.write_sweep_csv(_noisy(cfg, sweep), args.out, args.unit)
    print(f"wrote {args.out} ({len(sweep)} spectra)")
    return EXIT_OK


def _emit(report: dict, out: Optional[Path]) -> None:
    text = qio.format_report(report)
    sys.stdout.write(text)
    if out is not None:
        qio.atomic_write_text(out, text)


def _finite(v):
    return float(v) if math.isfinite(v) else None


def cmd_fit(args) -> int:
    try:
        text = args.input.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {args.input}: {exc}") from exc
    kind = qio.sniff_csv_kind(text)
    if args.mode == "zeeman":
        if kind == "zeeman":
            rows = qio.zeeman_from_csv(text)
        else:
            sweep, _ = qio.sweep_from_csv(text, AxisKind.MAGNETIC_FIELD)
            rows = zeeman_branches(sweep)
        result = fit_zeeman(rows)
    else:
        if kind == "zeeman":
            raise qio.CsvFormatError("anticrossing fits need a sweep CSV, not a branch table", 1)
        sweep, _ = qio.sweep_from_csv(text, AXES[args.axis])
        result = fit_anticrossing(sweep, args.model, fixed={"gamma_x": args.gamma_x},
                                  tuning_window=args.window)
    report = {"mode": args.mode}
    if args.mode == "anticrossing":
        report["model"] = args.model
    for k, v in result.params.items():
        report[k] = _finite(v)
        report[f"{k}_stderr"] = _finite(result.stderr.get(k, math.nan))
    for k, v in result.fixed.items():
        report[f"{k}_fixed"] = _finite(v)
    report.update(residual_norm=_finite(result.residual_norm), converged=bool(result.converged),
                  iterations=int(result.iterations))
    for k, v in result.info.items():
        if isinstance(v, (bool, int, float, str)) and k != "model":
            report[k] = v if not isinstance(v, float) else _finite(v)
    if args.mode == "anticrossing":
        try:
            win = sweep.window(args.window) if args.window else sweep
            ac = detect_anticrossing(win)
            report.update(min_gap=ac.min_gap, tuning_at_min=ac.tuning_value_at_min)
        except NoAntiCrossing:
            report.update(min_gap=None, tuning_at_min=None)
    _emit(report, args.out)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_reproduce(args) -> int:
    if args.figure not in FIGURES:
        raise UsageError(f"unknown figure {args.figure!r}; choose from {', '.join(FIGURES)}")
    cfg = _config(args)
    comps, files = run_figure(args.figure, cfg)
    write_bundle(args.out, args.figure, comps, files)
    sys.stdout.write(comparison_text(comps))
    failed = [c for c in comps if c.passed is False]
    if failed:
        names = ", ".join(c.target.quantity for c in failed)
        print(f"{args.figure}: {len(failed)} target(s) missed: {names}", file=sys.stderr)
        return EXIT_TARGET
    print(f"{args.figure}: all targets met; files in {args.out}")
    return EXIT_OK


COMMANDS = {
    "simulate-zeeman": cmd_simulate_zeeman,
    "simulate-sweep": cmd_simulate_sweep,
    "fit": cmd_fit,
    "reproduce": cmd_reproduce,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigError, qio.CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FitError, NoAntiCrossing) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
