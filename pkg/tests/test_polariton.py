import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdcavity.exciton import ExcitonParams, SpinBranch
from qdcavity.polariton import (
    CavityParams,
    CouplingParams,
    UnreachableResonance,
    cavity_linewidth,
    coupled_modes,
    eigvals_2x2,
    g_from_splitting,
    polariton_modes_2x2,
    polariton_modes_3x3,
    rabi_splitting,
    reduced_coupling,
    resonance_field,
    strong_coupling,
    vsystem_matrix,
)

EC = 1331731.4500537057
P, M = SpinBranch.PLUS_ONE, SpinBranch.MINUS_ONE


# -- scalar relations ------------------------------------------------------------

def test_cavity_linewidth(cav):
    assert cavity_linewidth(cav) == pytest.approx(147.970161117, rel=1e-10)
    assert cavity_linewidth(cav) == pytest.approx(150.0, rel=0.02)
    assert cavity_linewidth(CavityParams(9000.0, 9000.0)) == 1.0
    assert cavity_linewidth(CavityParams(EC, 1e12)) < 1e-5


@pytest.mark.parametrize("kwargs", [dict(Ec=EC, Q=0.0), dict(Ec=-1.0, Q=10.0)])
def test_cavity_invalid(kwargs):
    with pytest.raises(ValueError):
        CavityParams(**kwargs)


def test_rabi_splitting_examples():
    # 2*sqrt(72^2 - (149/4)^2) = 123.2305 (mpmath)
    assert rabi_splitting(72, 150, 1) == pytest.approx(123.2304751, abs=1e-6)
    assert rabi_splitting(37.25, 150, 1) == 0.0
    assert rabi_splitting(30, 150, 1) is None
    assert not strong_coupling(30, 150, 1)
    assert strong_coupling(72, 150, 1)
    with pytest.raises(ValueError):
        rabi_splitting(-1, 150, 1)


@pytest.mark.parametrize(
    "gap, expected", [(123, 71.9014081921), (102, 63.1550670968), (94, 59.9713473252)]
)
def test_g_from_splitting(gap, expected):
    assert g_from_splitting(gap, 150, 1) == pytest.approx(expected, abs=1e-9)


def test_g_from_splitting_rejects_negative():
    with pytest.raises(ValueError):
        g_from_splitting(-1.0, 150, 1)


def test_reduced_coupling():
    assert reduced_coupling(72.0, 0.0) == pytest.approx(72 / math.sqrt(2), rel=1e-15)
    assert 1 - reduced_coupling(1.0, 0.0) == pytest.approx(0.2928932, abs=1e-7)
    assert reduced_coupling(72.0, math.pi / 4) == pytest.approx(72.0, rel=1e-14)
    with pytest.raises(ValueError):
        reduced_coupling(72.0, 2.0)


def test_coupling_params_branch_fallback():
    c = CouplingParams(72.0, theta=0.3)
    assert c.branch(P) == pytest.approx(reduced_coupling(72.0, 0.3))
    c2 = CouplingParams(72.0, g_plus=63.0, g_minus=60.0)
    assert (c2.branch(P), c2.branch(M)) == (63.0, 60.0)
    with pytest.raises(ValueError):
        CouplingParams(-1.0)


# -- two-mode model --------------------------------------------------------------

def test_resonant_gap_with_reference_numbers():
    lo, hi = polariton_modes_2x2(EC, 1.0, EC, 150.0, 72.0)
    assert hi.energy - lo.energy == pytest.approx(123.2304751, abs=1e-6)
    # equal linewidth sharing on resonance in the strong regime
    assert lo.half_linewidth == pytest.approx(37.75, rel=1e-12)
    assert hi.half_linewidth == pytest.approx(37.75, rel=1e-12)


def test_uncoupled_modes_are_bare():
    lo, hi = polariton_modes_2x2(EC - 50, 1.0, EC, 150.0, 0.0)
    assert lo.eigenvalue == complex(EC - 50, -0.5)
    assert hi.eigenvalue == complex(EC, -75.0)
    assert lo.weights == (1.0, 0.0)
    assert hi.weights == (0.0, 1.0)


def test_far_detuning_perturbative():
    g = 50.0
    lo, hi = polariton_modes_2x2(EC - 100 * g, 1.0, EC, 150.0, g)
    assert lo.energy == pytest.approx(EC - 100 * g, abs=0.01 * 100 * g)
    assert hi.energy == pytest.approx(EC, abs=0.01 * 100 * g)
    # second-order shift g^2/delta
    assert hi.energy - EC == pytest.approx(g * g / (100 * g), rel=1e-3)


def test_closed_form_matches_numpy(rng):
    for _ in range(50):
        ex, gx, gc, g = EC + rng.normal(0, 200), rng.uniform(0.1, 20), rng.uniform(1, 300), rng.uniform(0, 150)
        H = np.array([[ex - 0.5j * gx, g], [g, EC - 0.5j * gc]])
        ref = np.sort_complex(np.linalg.eigvals(H))
        lo, hi = eigvals_2x2(ex, gx, EC, gc, g)
        assert np.allclose([lo, hi], ref, rtol=1e-13, atol=1e-7)


def test_eigvals_vectorised():
    ex = EC + np.linspace(-300, 300, 11)
    lo, hi = eigvals_2x2(ex, 1.0, EC, 150.0, 72.0)
    assert lo.shape == hi.shape == (11,)
    assert np.all(hi.real > lo.real)


# -- V system --------------------------------------------------------------------

def test_vsystem_matrix_layout():
    H = vsystem_matrix(1.0, 2.0, 0.5, 3.0, 4.0, 5.0, 6.0)
    expected = np.array([[1 - 0.25j, 0, 5], [0, 2 - 0.25j, 6], [5, 6, 3 - 2j]])
    assert np.array_equal(H, expected)


def test_block_reduction_example():
    ep, em = EC - 84, EC + 84
    modes = polariton_modes_3x3(ep, em, 1.0, EC, 147.97, 63.0, 0.0)
    two = polariton_modes_2x2(ep, 1.0, EC, 147.97, 63.0)
    ev = [m.eigenvalue for m in modes]
    bare = complex(em, -0.5)
    assert any(abs(e - bare) < 1e-9 for e in ev)
    rest = sorted((e for e in ev if abs(e - bare) > 1e-9), key=lambda z: z.real)
    assert rest[0] == pytest.approx(two[0].eigenvalue, abs=1e-9)
    assert rest[1] == pytest.approx(two[1].eigenvalue, abs=1e-9)


def test_bright_dark_example():
    g = 60.0
    modes = polariton_modes_3x3(EC + 10, EC + 10, 1.0, EC, 150.0, g, g)
    ev = [m.eigenvalue for m in modes]
    dark = complex(EC + 10, -0.5)
    assert min(abs(e - dark) for e in ev) < 1e-9
    bright = polariton_modes_2x2(EC + 10, 1.0, EC, 150.0, g * math.sqrt(2))
    for b in bright:
        assert min(abs(e - b.eigenvalue) for e in ev) < 1e-9


def test_one_tesla_trace(exc, cav, cpl):
    modes = coupled_modes(exc, cav, cpl, 1.0)
    energies = [m.energy for m in modes]
    assert len(set(energies)) == 3
    H = vsystem_matrix(exc.E0 - 83.9315361 + 6, exc.E0 + 83.9315361 + 6, 1.0, cav.Ec, cav.gamma_c, 63, 60)
    assert sum(m.eigenvalue for m in modes) == pytest.approx(np.trace(H), rel=1e-12)


def test_sort_order_ties_by_linewidth():
    modes = polariton_modes_3x3(EC, EC, 1.0, EC, 150.0, 0.0, 0.0)
    assert [m.half_linewidth for m in modes] == [0.5, 0.5, 75.0]


def test_zero_field_uses_linear_dipole(exc, cav, cpl):
    modes = coupled_modes(exc, cav, cpl, 0.0)
    assert len(modes) == 2
    ref = polariton_modes_2x2(exc.E0, 1.0, cav.Ec, cav.gamma_c, 72.0)
    assert [m.energy for m in modes] == [m.energy for m in ref]


# -- resonance field -------------------------------------------------------------

def _shifted(exc, detuning):
    from dataclasses import replace

    return replace(exc, E0=EC + detuning)


def test_resonance_field_plus(exc, cav):
    # 6B^2 - 83.9315B + 171.6517 = 0, smaller root (mpmath)
    b = resonance_field(_shifted(exc, 171.65174436782458), P, cav)
    assert b == pytest.approx(2.4874627567, abs=1e-9)


def test_resonance_field_minus(exc, cav):
    b = resonance_field(_shifted(exc, -314.69486467434506), M, cav)
    assert b == pytest.approx(3.0739376482, abs=1e-9)


def test_resonance_zero_detuning(exc, cav):
    assert resonance_field(_shifted(exc, 0.0), P, cav) == 0.0


def test_unreachable(exc, cav):
    with pytest.raises(UnreachableResonance):
        resonance_field(_shifted(exc, 1000.0), P, cav)  # blue side, discriminant < 0
    with pytest.raises(UnreachableResonance):
        resonance_field(_shifted(exc, 100.0), M, cav)  # -1 only moves up


def test_resonance_with_fine_structure(cav):
    from qdcavity.exciton import branch_energy

    p = ExcitonParams(EC + 150.0, fine_structure=30.0)
    b = resonance_field(p, P, cav)
    assert branch_energy(p, P, b) == pytest.approx(EC, abs=1e-6)


# -- properties ------------------------------------------------------------------

energies = st.floats(-500.0, 500.0)
widths = st.floats(0.05, 400.0)
couplings = st.floats(0.0, 200.0)


@given(energies, widths, widths, couplings)
def test_two_mode_trace_and_linewidths(dx, gx, gc, g):
    modes = polariton_modes_2x2(EC + dx, gx, EC, gc, g)
    tr = complex(2 * EC + dx, -(gx + gc) / 2)
    assert abs(sum(m.eigenvalue for m in modes) - tr) <= 1e-10 * abs(tr)
    assert sum(m.half_linewidth for m in modes) == pytest.approx((gx + gc) / 2, rel=1e-9, abs=1e-6)
    for m in modes:
        assert sum(w * w for w in m.weights) == pytest.approx(1.0, abs=1e-9)
        assert m.half_linewidth >= -1e-9


@given(energies, energies, widths, widths, couplings, couplings)
def test_three_mode_trace_and_linewidths(dp, dm, gx, gc, gp, gmi):
    modes = polariton_modes_3x3(EC + dp, EC + dm, gx, EC, gc, gp, gmi)
    tr = complex(3 * EC + dp + dm, -(2 * gx + gc) / 2)
    assert abs(sum(m.eigenvalue for m in modes) - tr) <= 1e-10 * abs(tr)
    assert sum(m.half_linewidth for m in modes) == pytest.approx((2 * gx + gc) / 2, rel=1e-9, abs=1e-6)
    for m in modes:
        assert sum(w * w for w in m.weights) == pytest.approx(1.0, abs=1e-9)


@given(widths, widths, st.floats(0.0, 400.0))
def test_inverse_identity(gx, gc, g):
    if not g > abs(gc - gx) / 4 * (1 + 1e-6):
        return
    assert g_from_splitting(rabi_splitting(g, gc, gx), gc, gx) == pytest.approx(g, rel=1e-10)


@given(st.floats(0.05, 300.0), st.floats(1e-3, 200.0))
def test_equal_weights_on_resonance_equal_widths(gam, g):
    for m in polariton_modes_2x2(EC, gam, EC, gam, g):
        assert m.weights[0] == pytest.approx(m.weights[1], abs=1e-6)


@given(widths, widths, couplings)
def test_resonant_weights_match_dense_solver(gx, gc, g):
    modes = polariton_modes_2x2(EC, gx, EC, gc, g)
    H = np.array([[EC - 0.5j * gx, g], [g, EC - 0.5j * gc]])
    w, v = np.linalg.eig(H)
    for m in modes:
        k = int(np.argmin(np.abs(w - m.eigenvalue)))
        if abs(w[k] - w[1 - k]) < 1e-6 * max(1.0, g):
            continue  # exceptional point: eigenvectors are not defined
        ref = np.abs(v[:, k]) / np.linalg.norm(v[:, k])
        assert np.allclose(m.weights, ref, atol=1e-6)


@given(st.floats(0.01, 1.39))
def test_reduced_coupling_in_range(theta):
    assert reduced_coupling(72.0, theta) >= 72.0 / math.sqrt(2) - 1e-12
