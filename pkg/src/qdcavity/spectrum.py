"""Forward synthesis of photoluminescence spectra and tuning sweeps."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .exciton import ExcitonParams, SpinBranch, branch_energy
from .polariton import CavityParams, ComplexMode, CouplingParams, coupled_modes
from .units import DEFAULT_WAVELENGTH_NM, detuning_nm_to_energy

# Spectrometer resolution of 0.02 nm expressed at the reference wavelength.
RESOLUTION_FLOOR_UEV = detuning_nm_to_energy(0.02, DEFAULT_WAVELENGTH_NM)


class Emphasis(enum.Enum):
    CAVITY_WEIGHTED = "cavity_weighted"
    EXCITON_WEIGHTED = "exciton_weighted"
    EQUAL = "equal"


class AxisKind(enum.Enum):
    MAGNETIC_FIELD = "magnetic_field"
    TEMPERATURE = "temperature"


def _strictly_increasing(x) -> bool:
    return x.ndim == 1 and x.size > 0 and bool(np.all(np.diff(x) > 0))


@dataclass
class Spectrum:
    energies: np.ndarray  # ueV, strictly increasing
    intensities: np.ndarray

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.intensities = np.asarray(self.intensities, dtype=float)
        if not _strictly_increasing(self.energies):
            raise ValueError("spectrum energy grid must be strictly increasing")
        if self.intensities.shape != self.energies.shape:
            raise ValueError("intensities and energies differ in length")
        if np.any(self.intensities < 0):
            raise ValueError("intensities must be non-negative")


@dataclass
class SweepMap:
    """Stack of spectra on a shared energy grid versus B (T) or T (K).

    ``fixed`` records the other control parameter (temperature for a field
    sweep, field for a temperature sweep) when known.
    """

    tuning: np.ndarray
    energies: np.ndarray
    intensities: np.ndarray  # shape (n_tuning, n_energy)
    axis_kind: AxisKind = AxisKind.MAGNETIC_FIELD
    fixed: Optional[float] = None

    def __post_init__(self):
        self.tuning = np.asarray(self.tuning, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        self.intensities = np.atleast_2d(np.asarray(self.intensities, dtype=float))
        if self.tuning.ndim != 1 or self.tuning.size == 0:
            raise ValueError("tuning axis must be a non-empty 1-D array")
        d = np.diff(self.tuning)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("tuning axis must be strictly monotonic")
        if not _strictly_increasing(self.energies):
            raise ValueError("energy grid must be strictly increasing")
        if self.intensities.shape != (self.tuning.size, self.energies.size):
            raise ValueError(
                f"intensity shape {self.intensities.shape} does not match "
                f"({self.tuning.size}, {self.energies.size})"
            )

    def __len__(self):
        return self.tuning.size

    def spectrum(self, i: int) -> Spectrum:
        return Spectrum(self.energies, self.intensities[i])

    @property
    def spectra(self) -> list:
        return [self.spectrum(i) for i in range(len(self))]

    def window(self, tuning=None, energy=None) -> "SweepMap":
        """Sub-map restricted to closed tuning and/or energy intervals."""
        ti = np.ones(self.tuning.size, dtype=bool)
        ei = np.ones(self.energies.size, dtype=bool)
        if tuning is not None:
            ti = (self.tuning >= tuning[0]) & (self.tuning <= tuning[1])
        if energy is not None:
            ei = (self.energies >= energy[0]) & (self.energies <= energy[1])
        return SweepMap(
            self.tuning[ti], self.energies[ei], self.intensities[np.ix_(ti, ei)], self.axis_kind, self.fixed
        )


@dataclass(frozen=True)
class TemperatureTuning:
    """Linear temperature red shift of the dot: E0(T) = E_ref - slope*(T - T_ref)."""

    T_ref: float  # K
    E_ref: float  # ueV
    slope: float  # ueV / K
    quadratic: float = 0.0  # ueV / K^2, off by default

    def energy(self, T):
        dT = np.asarray(T, dtype=float) - self.T_ref
        out = self.E_ref - self.slope * dT - self.quadratic * dT**2
        return float(out) if out.ndim == 0 else out

    def temperature_for(self, energy: float) -> float:
        """Temperature at which the dot reaches ``energy`` (linear model only)."""
        if self.quadratic != 0.0:
            raise NotImplementedError("inverse of the quadratic model")
        if self.slope == 0:
            raise ValueError("slope is zero; temperature does not tune the dot")
        return self.T_ref + (self.E_ref - energy) / self.slope


def lorentzian(E, center, fwhm, amplitude=1.0):
    """Lorentzian with peak value ``amplitude`` at ``center``."""
    if np.any(np.asarray(fwhm) <= 0):
        raise ValueError("fwhm must be positive")
    hw2 = (0.5 * np.asarray(fwhm)) ** 2
    return amplitude * hw2 / ((np.asarray(E) - center) ** 2 + hw2)


def mode_amplitude(mode: ComplexMode, emphasis: Emphasis) -> float:
    if emphasis is Emphasis.CAVITY_WEIGHTED:
        return mode.cavity_weight**2
    if emphasis is Emphasis.EXCITON_WEIGHTED:
        return mode.exciton_weight**2
    return 1.0


def synth_spectrum(
    modes: Sequence[ComplexMode],
    grid,
    emphasis: Emphasis = Emphasis.CAVITY_WEIGHTED,
    resolution: float = RESOLUTION_FLOOR_UEV,
) -> Spectrum:
    """Sum of one Lorentzian per mode.

    Each line has FWHM ``max(2*half_linewidth, resolution)`` and a peak
    height equal to the squared weight selected by ``emphasis``.
    """
    if not modes:
        raise ValueError("need at least one mode")
    grid = np.asarray(grid, dtype=float)
    total = np.zeros_like(grid)
    for mode in modes:
        fwhm = max(2.0 * mode.half_linewidth, resolution)
        if fwhm <= 0:
            raise ValueError("zero linewidth with no resolution floor")
        amp = mode_amplitude(mode, emphasis)
        if amp > 0:
            total += lorentzian(grid, mode.energy, fwhm, amp)
    return Spectrum(grid, total)


def _stack(tuning, energies, modes_per_point, emphasis, resolution, kind, fixed):
    rows = [synth_spectrum(m, energies, emphasis, resolution).intensities for m in modes_per_point]
    return SweepMap(tuning, energies, np.array(rows), kind, fixed)


def sweep_magnetic(
    exc: ExcitonParams,
    cav: CavityParams,
    cpl: CouplingParams,
    B_grid,
    energy_grid,
    emphasis: Emphasis = Emphasis.CAVITY_WEIGHTED,
    resolution: float = RESOLUTION_FLOOR_UEV,
    temperature: Optional[float] = None,
) -> SweepMap:
    """Spectra versus magnetic field at fixed dot energy ``exc.E0``."""
    B_grid = np.asarray(B_grid, dtype=float)
    modes = [coupled_modes(exc, cav, cpl, float(b)) for b in B_grid]
    return _stack(B_grid, energy_grid, modes, emphasis, resolution, AxisKind.MAGNETIC_FIELD, temperature)


def sweep_exciton(
    exc: ExcitonParams,
    B_grid,
    energy_grid,
    resolution: float = RESOLUTION_FLOOR_UEV,
) -> SweepMap:
    """Bare dot emission versus field: one line per spin branch, no cavity.

    Where the branches coincide (zero field, no fine structure) they merge
    into a single line of twice the height.
    """
    B_grid = np.asarray(B_grid, dtype=float)
    energies = np.asarray(energy_grid, dtype=float)
    fwhm = max(exc.gamma_x, resolution)
    rows = []
    for b in B_grid:
        row = np.zeros_like(energies)
        for br in SpinBranch:
            row += lorentzian(energies, branch_energy(exc, br, float(b)), fwhm)
        rows.append(row)
    return SweepMap(B_grid, energies, np.array(rows), AxisKind.MAGNETIC_FIELD)


def sweep_temperature(
    exc: ExcitonParams,
    tt: TemperatureTuning,
    cav: CavityParams,
    cpl: CouplingParams,
    T_grid,
    energy_grid,
    B_fixed: float = 0.0,
    emphasis: Emphasis = Emphasis.CAVITY_WEIGHTED,
    resolution: float = RESOLUTION_FLOOR_UEV,
) -> SweepMap:
    """Spectra versus temperature at fixed field.

    The zero-field dot energy follows ``tt``; ``exc.E0`` is ignored.  The
    cavity line does not move.
    """
    T_grid = np.asarray(T_grid, dtype=float)
    modes = [coupled_modes(replace(exc, E0=tt.energy(t)), cav, cpl, B_fixed) for t in T_grid]
    return _stack(T_grid, energy_grid, modes, emphasis, resolution, AxisKind.TEMPERATURE, B_fixed)


def add_noise(sweep: SweepMap, model: str = "gaussian", scale: float = 0.01, seed: int = 0) -> SweepMap:
    """Noisy copy of ``sweep``, clamped at zero.

    ``gaussian`` adds noise with standard deviation ``scale`` times the map
    maximum.  ``shot`` treats ``scale`` as the intensity of one count,
    ``I -> Poisson(I / scale) * scale``.  Each spectrum draws from its own
    stream spawned from ``seed``.
    """
    if scale < 0:
        raise ValueError("noise scale must be >= 0")
    if scale == 0:
        return replace(sweep, intensities=sweep.intensities.copy())
    streams = np.random.SeedSequence(seed).spawn(len(sweep))
    peak = float(sweep.intensities.max())
    rows = []
    for row, ss in zip(sweep.intensities, streams):
        rng = np.random.default_rng(ss)
        if model == "gaussian":
            noisy = row + rng.normal(0.0, scale * peak, row.shape)
        elif model == "shot":
            noisy = rng.poisson(row / scale) * scale
        else:
            raise ValueError(f"unknown noise model {model!r}")
        rows.append(np.clip(noisy, 0.0, None))
    return replace(sweep, intensities=np.array(rows))
