"""CSV sweep files, Zeeman branch tables and fit reports.

Sweep CSV layout (UTF-8, comma separated, '.' decimal, no blank lines)::

    tuning,energy_ueV,intensity        (or tuning,wavelength_nm,intensity)
    1.5,1331031.45,0.0123
    ...

Rows of one spectrum share a tuning value; a new tuning value starts the
next frame.  Exactly one spectral column is present; its header names the
unit.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Tuple

import numpy as np

from .spectrum import AxisKind, SweepMap
from .units import energy_to_wavelength, wavelength_to_energy

UNIT_COLUMNS = {"ueV": "energy_ueV", "nm": "wavelength_nm"}
ZEEMAN_HEADER = ("B_T", "E_plus_ueV", "E_minus_ueV")


class CsvFormatError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return repr(float(x))


def sweep_to_csv(sweep: SweepMap, unit: str = "ueV") -> str:
    if unit not in UNIT_COLUMNS:
        raise ValueError(f"unit must be one of {list(UNIT_COLUMNS)}")
    x = sweep.energies if unit == "ueV" else energy_to_wavelength(sweep.energies)
    xs = [_fmt(v) for v in x]
    lines = [f"tuning,{UNIT_COLUMNS[unit]},intensity"]
    for t, row in zip(sweep.tuning, sweep.intensities):
        ts = _fmt(t)
        lines.extend(f"{ts},{xv},{_fmt(iv)}" for xv, iv in zip(xs, row))
    return "\n".join(lines) + "\n"


def write_sweep_csv(sweep: SweepMap, path, unit: str = "ueV") -> None:
    atomic_write_text(path, sweep_to_csv(sweep, unit))


def _rows(text: str, n_cols: int) -> Tuple[List[str], List[Tuple[int, List[float]]]]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CsvFormatError("empty file", 1)
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) != n_cols:
        raise CsvFormatError(f"expected {n_cols} header columns, got {len(header)}", 1)
    out = []
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise CsvFormatError("blank line", no)
        parts = line.split(",")
        if len(parts) != n_cols:
            raise CsvFormatError(f"expected {n_cols} fields, got {len(parts)}", no)
        try:
            out.append((no, [float(p) for p in parts]))
        except ValueError:
            raise CsvFormatError(f"non-numeric field in {line!r}", no) from None
    if not out:
        raise CsvFormatError("no data rows", len(lines))
    return header, out


def sweep_from_csv(text: str, axis_kind: AxisKind = AxisKind.MAGNETIC_FIELD) -> Tuple[SweepMap, str]:
    """Parse a sweep CSV; returns the map (energies in ueV) and the file unit."""
    header, rows = _rows(text, 3)
    units = [u for u, col in UNIT_COLUMNS.items() if header[1] == col]
    if header[0] != "tuning" or header[2] != "intensity" or not units:
        raise CsvFormatError(
            "header must be tuning,energy_ueV,intensity or tuning,wavelength_nm,intensity", 1
        )
    unit = units[0]
    frames: list = []
    tuning: list = []
    for no, (t, x, inten) in rows:
        if not tuning or t != tuning[-1]:
            if t in tuning:
                raise CsvFormatError(f"tuning value {t} appears in two separate frames", no)
            tuning.append(t)
            frames.append(([], [], no))
        if inten < 0:
            raise CsvFormatError("negative intensity", no)
        frames[-1][0].append(x)
        frames[-1][1].append(inten)
    grid = np.array(frames[0][0])
    for xs, _, no in frames[1:]:
        if len(xs) != grid.size or not np.array_equal(np.array(xs), grid):
            raise CsvFormatError("frame does not share the first frame's spectral grid", no)
    inten = np.array([f[1] for f in frames])
    energies = grid if unit == "ueV" else wavelength_to_energy(grid)
    order = np.argsort(energies)
    energies = np.asarray(energies)[order]
    if np.any(np.diff(energies) <= 0):
        raise CsvFormatError("spectral grid is not strictly monotonic", 2)
    try:
        sweep = SweepMap(np.array(tuning), energies, inten[:, order], axis_kind)
    except ValueError as exc:
        raise CsvFormatError(str(exc)) from None
    return sweep, unit


def read_sweep_csv(path, axis_kind: AxisKind = AxisKind.MAGNETIC_FIELD) -> Tuple[SweepMap, str]:
    return sweep_from_csv(Path(path).read_text(encoding="utf-8"), axis_kind)


def zeeman_to_csv(rows: Iterable[Tuple[float, float, float]]) -> str:
    lines = [",".join(ZEEMAN_HEADER)]
    lines.extend(",".join(_fmt(v) for v in r) for r in rows)
    return "\n".join(lines) + "\n"


def zeeman_from_csv(text: str) -> List[Tuple[float, float, float]]:
    header, rows = _rows(text, 3)
    if tuple(header) != ZEEMAN_HEADER:
        raise CsvFormatError(f"header must be {','.join(ZEEMAN_HEADER)}", 1)
    return [tuple(vals) for _, vals in rows]


def sniff_csv_kind(text: str) -> str:
    first = text.split("\n", 1)[0].strip()
    if first == ",".join(ZEEMAN_HEADER):
        return "zeeman"
    return "sweep"


def format_report(values: dict) -> str:
    """``# key = value`` lines followed by a fenced JSON block of the same data."""
    lines = []
    for key, value in values.items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"# {key} = {text}")
    block = json.dumps(values, indent=2)
    return "\n".join(lines) + "\n\n```json\n" + block + "\n```\n"


def parse_report(text: str) -> dict:
    start = text.index("```json\n") + len("```json\n")
    end = text.index("\n```", start)
    return json.loads(text[start:end])
