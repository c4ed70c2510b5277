"""Exciton spin-branch energies in a Faraday-geometry magnetic field.

The two bright exciton states carry angular momentum +1 and -1.  Their
energies are

    E_m(B) = E0 + gamma2 * B**2 - m * sqrt((gamma1 * B)**2 + (delta / 2)**2)

with ``gamma1 = g_diff * mu_B / 2`` the Zeeman rate, ``gamma2`` the
diamagnetic coefficient and ``delta`` an optional zero-field fine-structure
splitting (zero by default, which gives the plain ``E0 - m*gamma1*B +
gamma2*B**2``).  The diamagnetic term is common to both branches; only the
Zeeman term separates them.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .units import CONSTANTS


class SpinBranch(enum.Enum):
    PLUS_ONE = 1
    MINUS_ONE = -1

    @property
    def m(self) -> int:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "SpinBranch":
        key = str(text).strip().lower().replace("_", "").replace(" ", "")
        if key in ("+1", "1", "plusone", "plus"):
            return cls.PLUS_ONE
        if key in ("-1", "minusone", "minus"):
            return cls.MINUS_ONE
        raise ValueError(f"unknown spin branch {text!r}")


@dataclass(frozen=True)
class ExcitonParams:
    """Bare exciton parameters (energies in ueV)."""

    E0: float
    g_diff: float = 2.9
    gamma2: float = 6.0  # ueV / T^2
    gamma_x: float = 1.0
    fine_structure: float = 0.0

    def __post_init__(self):
        if not self.E0 > 0:
            raise ValueError(f"exciton.E0 must be > 0, got {self.E0}")
        if not self.gamma2 >= 0:
            raise ValueError(f"exciton.gamma2 must be >= 0, got {self.gamma2}")
        if not self.gamma_x > 0:
            raise ValueError(f"exciton.gamma_x must be > 0, got {self.gamma_x}")
        if not self.fine_structure >= 0:
            raise ValueError("exciton.fine_structure must be >= 0")


def zeeman_rate(params: ExcitonParams) -> float:
    """Linear Zeeman rate gamma1 = g_diff * mu_B / 2 in ueV/T."""
    return params.g_diff * CONSTANTS.bohr_magneton / 2.0


def _field(B):
    b = np.asarray(B, dtype=float)
    if np.any(b < 0) or np.any(np.isnan(b)):
        raise ValueError(f"magnetic field must be >= 0, got {B!r}")
    return b


def _half_split(params, b):
    g1 = zeeman_rate(params)
    if params.fine_structure == 0.0:
        return g1 * b
    return np.hypot(g1 * b, params.fine_structure / 2.0)


def branch_energy(params: ExcitonParams, branch: SpinBranch, B):
    """Energy (ueV) of one spin branch at field ``B`` (T, scalar or array)."""
    b = _field(B)
    out = params.E0 + params.gamma2 * b**2 - branch.m * _half_split(params, b)
    return float(out) if out.ndim == 0 else out


def branch_splitting(params: ExcitonParams, B):
    """E(-1) - E(+1) in ueV; equals 2 * gamma1 * B without fine structure."""
    b = _field(B)
    out = 2.0 * _half_split(params, b)
    return float(out) if out.ndim == 0 else out
