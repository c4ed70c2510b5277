"""Physical constants and photon energy / wavelength conversions.

All energies inside the package are in micro-electronvolts (ueV).
Wavelengths (nm) only appear at input/output boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhysConstants:
    bohr_magneton: float = 57.883818  # ueV / T
    hc: float = 1239.84198  # eV nm


CONSTANTS = PhysConstants()

# ueV nm
HC_UEV_NM = CONSTANTS.hc * 1e6

# Reference emission wavelength, derived from the 0.58 nm <-> 0.83 meV
# pairing of the -1 branch shift at 7 T (see reference_wavelength()).
DEFAULT_WAVELENGTH_NM = 931.0


def _check_positive(value, name):
    arr = np.asarray(value, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"{name} must be positive, got {value!r}")
    return arr


def wavelength_to_energy(wavelength_nm):
    """Photon energy in ueV for a vacuum wavelength in nm."""
    lam = _check_positive(wavelength_nm, "wavelength")
    out = HC_UEV_NM / lam
    return float(out) if out.ndim == 0 else out


def energy_to_wavelength(energy_ueV):
    """Vacuum wavelength in nm for a photon energy in ueV."""
    e = _check_positive(energy_ueV, "energy")
    out = HC_UEV_NM / e
    return float(out) if out.ndim == 0 else out


def detuning_nm_to_energy(delta_nm, lambda_ref_nm=DEFAULT_WAVELENGTH_NM):
    """First-order energy detuning for a wavelength offset.

    A positive ``delta_nm`` is a blue shift (shorter wavelength) and maps to
    a positive energy detuning, ``hc * delta / lambda_ref**2``.
    """
    lam = _check_positive(lambda_ref_nm, "reference wavelength")
    out = HC_UEV_NM * np.asarray(delta_nm, dtype=float) / lam**2
    return float(out) if out.ndim == 0 else out


def energy_to_detuning_nm(delta_ueV, lambda_ref_nm=DEFAULT_WAVELENGTH_NM):
    """Inverse of :func:`detuning_nm_to_energy`."""
    lam = _check_positive(lambda_ref_nm, "reference wavelength")
    out = np.asarray(delta_ueV, dtype=float) * lam**2 / HC_UEV_NM
    return float(out) if out.ndim == 0 else out


def reference_wavelength(delta_nm: float, delta_ueV: float) -> float:
    """Wavelength at which a shift of ``delta_nm`` equals ``delta_ueV``.

    Solves ``dE = hc * dlam / lam**2`` for ``lam``.
    """
    if delta_nm <= 0 or delta_ueV <= 0:
        raise ValueError("both shifts must be positive")
    return math.sqrt(HC_UEV_NM * delta_nm / delta_ueV)
