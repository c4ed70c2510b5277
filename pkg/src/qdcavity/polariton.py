"""Exciton-cavity polaritons as eigenmodes of a non-Hermitian coupled-mode matrix.

Each bare state enters the matrix as ``E - i*gamma/2`` (``gamma`` is the
FWHM linewidth), coupled to the cavity through a real coupling ``g``.  The
two-mode problem is solved in closed form, the three-mode V system (two
spin branches sharing one cavity mode) with a dense eigensolver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exciton import ExcitonParams, SpinBranch, branch_energy, branch_splitting, zeeman_rate


class UnreachableResonance(ValueError):
    """No non-negative magnetic field brings the branch onto the cavity."""


@dataclass(frozen=True)
class CavityParams:
    Ec: float  # ueV
    Q: float

    def __post_init__(self):
        if not self.Ec > 0:
            raise ValueError(f"cavity.Ec must be > 0, got {self.Ec}")
        if not self.Q > 0:
            raise ValueError(f"cavity.Q must be > 0, got {self.Q}")

    @property
    def gamma_c(self) -> float:
        return cavity_linewidth(self)


@dataclass(frozen=True)
class CouplingParams:
    """Exciton-cavity couplings in ueV.

    ``g0`` is the zero-field coupling of the linear dipole, at angle
    ``theta`` (rad) to the cavity polarization.  The circular spin branches
    at finite field use ``g_plus``/``g_minus`` when given, otherwise
    ``reduced_coupling(g0, theta)``.
    """

    g0: float
    theta: float = 0.0
    g_plus: Optional[float] = None
    g_minus: Optional[float] = None

    def __post_init__(self):
        for name in ("g0", "g_plus", "g_minus"):
            value = getattr(self, name)
            if value is not None and not value >= 0:
                raise ValueError(f"coupling.{name} must be >= 0, got {value}")
        if (self.g_plus is None or self.g_minus is None) and not math.cos(self.theta) > 0:
            raise ValueError("coupling.theta must satisfy cos(theta) > 0")

    def branch(self, branch: SpinBranch) -> float:
        given = self.g_plus if branch is SpinBranch.PLUS_ONE else self.g_minus
        if given is not None:
            return given
        return reduced_coupling(self.g0, self.theta)


@dataclass(frozen=True)
class ComplexMode:
    """One eigenmode.  ``weights`` are eigenvector magnitudes, cavity last."""

    energy: float
    half_linewidth: float
    weights: tuple

    @property
    def cavity_weight(self) -> float:
        return self.weights[-1]

    @property
    def exciton_weight(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights[:-1]))

    @property
    def eigenvalue(self) -> complex:
        return complex(self.energy, -self.half_linewidth)


def cavity_linewidth(cav: CavityParams) -> float:
    """Cavity FWHM linewidth Ec / Q in ueV."""
    return cav.Ec / cav.Q


def _check_nonneg(**values):
    for name, v in values.items():
        if np.any(np.asarray(v) < 0):
            raise ValueError(f"{name} must be >= 0, got {v!r}")


def strong_coupling(g, gamma_c, gamma_x) -> bool:
    """True when the vacuum Rabi splitting is real and non-zero."""
    return bool(g > abs(gamma_c - gamma_x) / 4.0)


def rabi_splitting(g: float, gamma_c: float, gamma_x: float) -> Optional[float]:
    """On-resonance polariton splitting ``2*sqrt(g^2 - (gamma_c-gamma_x)^2/16)``.

    Returns ``None`` when the radicand is negative (no resolvable splitting)
    and 0.0 exactly on the threshold.
    """
    _check_nonneg(g=g, gamma_c=gamma_c, gamma_x=gamma_x)
    radicand = g**2 - (gamma_c - gamma_x) ** 2 / 16.0
    if radicand < 0:
        return None
    return 2.0 * math.sqrt(radicand)


def g_from_splitting(delta_e: float, gamma_c: float, gamma_x: float) -> float:
    """Coupling strength that produces the on-resonance splitting ``delta_e``."""
    if delta_e < 0:
        raise ValueError(f"splitting must be >= 0, got {delta_e}")
    return math.hypot(delta_e / 2.0, (gamma_c - gamma_x) / 4.0)


def reduced_coupling(g0: float, theta: float) -> float:
    """High-field circular-state coupling ``g0 / (sqrt(2) cos theta)``."""
    c = math.cos(theta)
    if not c > 0:
        raise ValueError(f"cos(theta) must be > 0, got theta={theta}")
    return g0 / (math.sqrt(2.0) * c)


def eigvals_2x2(Ex, gamma_x, Ec, gamma_c, g):
    """Closed-form eigenvalues (lower, upper) of the two-mode matrix.

    Works elementwise on arrays.  Ordering is by real part, ties broken
    by the smaller half-linewidth first.
    """
    a = np.asarray(Ex, dtype=float) - 0.5j * np.asarray(gamma_x, dtype=float)
    c = np.asarray(Ec, dtype=float) - 0.5j * np.asarray(gamma_c, dtype=float)
    g = np.asarray(g, dtype=float)
    mean = 0.5 * (a + c)
    s = np.sqrt((0.5 * (a - c)) ** 2 + g**2 + 0j)
    l1, l2 = mean - s, mean + s
    swap = (l1.real > l2.real) | ((l1.real == l2.real) & (-l1.imag > -l2.imag))
    lo = np.where(swap, l2, l1)
    hi = np.where(swap, l1, l2)
    return lo, hi


def _eigvec_2x2(a, c, g, lam):
    v1 = np.array([g, lam - a], dtype=complex)
    v2 = np.array([lam - c, g], dtype=complex)
    v = v1 if abs(v1[0]) + abs(v1[1]) >= abs(v2[0]) + abs(v2[1]) else v2
    n = np.linalg.norm(v)
    if n == 0:
        return None
    return np.abs(v / n)


def polariton_modes_2x2(Ex, gamma_x, Ec, gamma_c, g) -> list:
    """Two polariton modes of one exciton line coupled to the cavity."""
    _check_nonneg(gamma_x=gamma_x, gamma_c=gamma_c, g=g)
    lo, hi = eigvals_2x2(Ex, gamma_x, Ec, gamma_c, g)
    a = Ex - 0.5j * gamma_x
    c = Ec - 0.5j * gamma_c
    modes = []
    for k, lam in enumerate((complex(lo), complex(hi))):
        w = _eigvec_2x2(a, c, g, lam)
        if w is None:
            # uncoupled and exactly degenerate: any basis works
            w = np.eye(2)[k]
        modes.append(ComplexMode(float(lam.real), float(-lam.imag), tuple(float(x) for x in w)))
    return modes


def vsystem_matrix(E_plus, E_minus, gamma_x, Ec, gamma_c, g_plus, g_minus):
    """Stack of 3x3 V-system matrices in the basis (X+, X-, cavity)."""
    E_plus, E_minus, Ec, g_plus, g_minus = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (E_plus, E_minus, Ec, g_plus, g_minus))
    )
    gx = np.broadcast_to(np.asarray(gamma_x, dtype=float), E_plus.shape)
    gc = np.broadcast_to(np.asarray(gamma_c, dtype=float), E_plus.shape)
    H = np.zeros(E_plus.shape + (3, 3), dtype=complex)
    H[..., 0, 0] = E_plus - 0.5j * gx
    H[..., 1, 1] = E_minus - 0.5j * gx
    H[..., 2, 2] = Ec - 0.5j * gc
    H[..., 0, 2] = H[..., 2, 0] = g_plus
    H[..., 1, 2] = H[..., 2, 1] = g_minus
    return H


def sorted_eig(H):
    """Eigen-decomposition of a stack of matrices, sorted per matrix.

    Sort key is (real part, half-linewidth).  Eigenvectors are returned
    as columns with unit 2-norm.
    """
    H = np.asarray(H)
    # diagonalise relative to the mean diagonal energy: the eigenvectors are
    # unchanged and the rounding error scales with the spread, not with ~1e6
    shift = np.mean(np.diagonal(H, axis1=-2, axis2=-1).real, axis=-1)
    w, v = np.linalg.eig(H - shift[..., None, None] * np.eye(H.shape[-1]))
    w = w + shift[..., None]
    order = np.lexsort((-w.imag, w.real), axis=-1)
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return w, v


def polariton_modes_3x3(E_plus, E_minus, gamma_x, Ec, gamma_c, g_plus, g_minus) -> list:
    """Three eigenmodes of the V system (two spin branches, one cavity mode)."""
    _check_nonneg(gamma_x=gamma_x, gamma_c=gamma_c, g_plus=g_plus, g_minus=g_minus)
    H = vsystem_matrix(E_plus, E_minus, gamma_x, Ec, gamma_c, g_plus, g_minus)
    w, v = sorted_eig(H)
    return [
        ComplexMode(float(w[k].real), float(-w[k].imag), tuple(float(x) for x in np.abs(v[:, k])))
        for k in range(3)
    ]


def coupled_modes(exc: ExcitonParams, cav: CavityParams, cpl: CouplingParams, B: float) -> list:
    """Eigenmodes of the dot-cavity system at field ``B``.

    With degenerate spin branches (zero field, no fine structure) the dot
    is a single linear dipole coupled with ``g0``; otherwise the two
    circular branches form a V system with their own couplings.
    """
    gamma_c = cav.gamma_c
    if branch_splitting(exc, B) == 0.0:
        return polariton_modes_2x2(exc.E0 + exc.gamma2 * B**2, exc.gamma_x, cav.Ec, gamma_c, cpl.g0)
    return polariton_modes_3x3(
        branch_energy(exc, SpinBranch.PLUS_ONE, B),
        branch_energy(exc, SpinBranch.MINUS_ONE, B),
        exc.gamma_x,
        cav.Ec,
        gamma_c,
        cpl.branch(SpinBranch.PLUS_ONE),
        cpl.branch(SpinBranch.MINUS_ONE),
    )


def _nonneg_roots(a, b, c):
    """Real non-negative roots of a*x^2 + b*x + c (closed form)."""
    tol = 1e-12 * max(abs(a), abs(b), abs(c), 1.0)
    if abs(a) <= tol:
        if abs(b) <= tol:
            return []
        roots = [-c / b]
    else:
        disc = b * b - 4 * a * c
        if disc < 0:
            if disc > -1e-12 * b * b:
                disc = 0.0
            else:
                return []
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        roots = [q / a] if q == 0 else [q / a, c / q]
    out = []
    for r in roots:
        if r < 0 and r > -1e-12:
            r = 0.0
        if r >= 0:
            out.append(r)
    return sorted(out)


def resonance_field(exc: ExcitonParams, branch: SpinBranch, cav: CavityParams) -> float:
    """Smallest field B >= 0 at which ``branch`` is degenerate with the cavity."""
    detuning = exc.E0 - cav.Ec
    g1 = zeeman_rate(exc)
    m = branch.m
    if exc.fine_structure == 0.0:
        roots = _nonneg_roots(exc.gamma2, -m * g1, detuning)
    else:
        half = exc.fine_structure / 2.0
        us = _nonneg_roots(exc.gamma2**2, 2 * exc.gamma2 * detuning - g1**2, detuning**2 - half**2)
        roots = []
        for u in us:
            b = math.sqrt(u)
            if abs(branch_energy(exc, branch, b) - cav.Ec) <= 1e-6 * max(1.0, abs(detuning)):
                roots.append(b)
    if not roots:
        raise UnreachableResonance(
            f"branch {branch.name} never reaches the cavity (detuning {detuning:.3f} ueV)"
        )
    return roots[0]
