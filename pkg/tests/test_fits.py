import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdcavity.exciton import ExcitonParams, SpinBranch, branch_energy, branch_splitting
from qdcavity.fitkit.fits import (
    TWO_LEVEL,
    V_SYSTEM,
    AnticrossingModel,
    FitError,
    InconsistentPair,
    fit_anticrossing,
    fit_zeeman,
    infer_dipole_angle,
    rabi_vs_field,
    zeeman_branches,
)
from qdcavity.polariton import rabi_splitting, reduced_coupling
from qdcavity.spectrum import sweep_exciton, sweep_temperature

P, M = SpinBranch.PLUS_ONE, SpinBranch.MINUS_ONE


def _rows(exc, fields):
    return [(b, branch_energy(exc, P, b), branch_energy(exc, M, b)) for b in fields]


# -- Zeeman ------------------------------------------------------------------------

def test_zeeman_exact_recovery(exc):
    r = fit_zeeman(_rows(exc, np.arange(0.0, 7.01, 1.0)))
    assert r["g_diff"] == pytest.approx(2.9, rel=1e-8)
    assert r["gamma2"] == pytest.approx(6.0, rel=1e-8)
    assert r["E0"] == pytest.approx(exc.E0, rel=1e-12)
    assert r.converged
    assert all(v >= 0 for v in r.stderr.values())


def test_zeeman_without_diamagnetic_term(exc):
    r = fit_zeeman(_rows(replace(exc, gamma2=0.0), np.arange(0.0, 7.01, 0.5)))
    assert r["gamma2"] == pytest.approx(0.0, abs=1e-9)


def test_zeeman_needs_three_fields(exc):
    with pytest.raises(FitError):
        fit_zeeman(_rows(exc, [1.0, 1.0, 1.0]))
    with pytest.raises(FitError):
        fit_zeeman(_rows(exc, [0.0, 2.0]))


def test_zeeman_skips_missing_points(exc):
    rows = _rows(exc, np.arange(0.0, 7.01, 1.0))
    rows[3] = (rows[3][0], math.nan, rows[3][2])
    r = fit_zeeman(rows)
    assert r["g_diff"] == pytest.approx(2.9, rel=1e-8)
    assert r.info["n_points"] == 15


def test_zeeman_noisy_centres(exc):
    """1% of the local branch splitting as Gaussian noise on every center."""
    B = np.linspace(0.0, 7.0, 29)
    split = branch_splitting(exc, B)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        rows = [
            (b, branch_energy(exc, P, b) + rng.normal(0, 0.01 * s), branch_energy(exc, M, b) + rng.normal(0, 0.01 * s))
            for b, s in zip(B, split)
        ]
        r = fit_zeeman(rows)
        assert r["g_diff"] == pytest.approx(2.9, rel=0.05)
        assert r["gamma2"] == pytest.approx(6.0, rel=0.05)


def test_zeeman_from_spectra(exc):
    E = exc.E0 + np.arange(-450.0, 1050.0, 1.0)
    m = sweep_exciton(exc, np.linspace(0, 7, 29), E)
    rows = zeeman_branches(m)
    assert rows[0][1] == rows[0][2]
    r = fit_zeeman(rows)
    assert r["g_diff"] == pytest.approx(2.9, rel=1e-6)
    assert r["gamma2"] == pytest.approx(6.0, rel=1e-6)


# -- dipole angle ------------------------------------------------------------------

def test_angle_aligned():
    assert infer_dipole_angle(72.0, 72.0 / math.sqrt(2)) == pytest.approx(0.0, abs=1e-7)


def test_angle_values():
    # arccos(72 / (sqrt(2) g')) evaluated with mpmath
    assert math.degrees(infer_dipole_angle(72.0, 60.0)) == pytest.approx(31.9480594313, abs=1e-9)
    assert math.degrees(infer_dipole_angle(72.0, 63.0)) == pytest.approx(36.0871470657, abs=1e-9)


def test_angle_inconsistent_pair():
    with pytest.raises(InconsistentPair):
        infer_dipole_angle(72.0, 40.0)
    with pytest.raises(ValueError):
        infer_dipole_angle(72.0, 0.0)


@given(st.floats(1e-3, math.radians(80.0)), st.floats(1.0, 300.0))
def test_angle_inverts_reduced_coupling(theta, g0):
    assert infer_dipole_angle(g0, reduced_coupling(g0, theta)) == pytest.approx(theta, abs=1e-9)


# -- Rabi table -----------------------------------------------------------------------

def test_reductions_for_one_tesla_pair():
    t = rabi_vs_field([(1.0, 102.0, 94.0)], 150.0, 1.0, g0=72.0)
    # 1 - 63.1551/72 and 1 - 59.9713/72
    assert t.reduction_plus == pytest.approx(0.1228463, abs=1e-6)
    assert t.reduction_minus == pytest.approx(0.1670646, abs=1e-6)
    assert abs(t.reduction_plus - 0.11) <= 0.03
    assert abs(t.reduction_minus - 0.17) <= 0.03


def test_constant_gaps_constant_couplings():
    t = rabi_vs_field([(b, 100.0, 90.0) for b in range(1, 8)], 150.0, 1.0)
    assert np.ptp(t.g_plus) == 0 and np.ptp(t.g_minus) == 0
    assert t.reduction_plus is None
    assert t.rows()[0][0] == 1.0


@given(st.floats(40.0, 200.0), st.floats(40.0, 200.0))
def test_rabi_table_exact_recovery(gp, gm):
    gaps = [(1.0, rabi_splitting(gp, 150.0, 1.0), rabi_splitting(gm, 150.0, 1.0))]
    t = rabi_vs_field(gaps, 150.0, 1.0)
    assert t.g_plus[0] == pytest.approx(gp, rel=1e-10)
    assert t.g_minus[0] == pytest.approx(gm, rel=1e-10)


# -- anti-crossing fits ----------------------------------------------------------

def test_two_level_fit_recovers_reference(map0, cfg):
    r = fit_anticrossing(map0, TWO_LEVEL)
    assert r.converged
    assert r["g"] == pytest.approx(72.0, rel=1e-6)
    assert r["gamma_c"] == pytest.approx(cfg.cavity.gamma_c, rel=1e-6)
    assert r["Ec"] == pytest.approx(cfg.cavity.Ec, rel=1e-12)
    # dot moves red with temperature: rate is -slope
    assert r["rate"] == pytest.approx(-cfg.temperature_tuning.slope, rel=1e-6)
    assert r["t0"] == pytest.approx(36.4705882353, abs=1e-6)
    assert r.info["strong_coupling"]
    assert r["gamma_x"] == 1.0
    assert np.all(np.diff(r.history) <= 0)


@pytest.mark.parametrize("g", [63.0, 60.0])
def test_two_level_fit_other_couplings(cfg, g):
    cpl = replace(cfg.coupling, g0=g)
    m = sweep_temperature(cfg.exciton, cfg.temperature_tuning, cfg.cavity, cpl, cfg.grid("T"), cfg.energy_grid())
    assert fit_anticrossing(m)["g"] == pytest.approx(g, rel=1e-6)


def test_v_system_windowed_fits(map1):
    for window in ((33.0, 38.0), (35.3, 40.3)):
        r = fit_anticrossing(map1, V_SYSTEM, tuning_window=window)
        assert r.converged
        assert r["g_plus"] == pytest.approx(63.0, rel=1e-6)
        assert r["g_minus"] == pytest.approx(60.0, rel=1e-6)
        assert r["split"] == pytest.approx(167.8630722, rel=1e-6)


def test_weak_coupling_flagged(cfg):
    cpl = replace(cfg.coupling, g0=20.0)
    m = sweep_temperature(cfg.exciton, cfg.temperature_tuning, cfg.cavity, cpl, cfg.grid("T"), cfg.energy_grid())
    r = fit_anticrossing(m)
    assert r.converged
    assert r.info["strong_coupling"] is False


def test_fixed_parameters_respected(map0, cfg):
    r = fit_anticrossing(map0, fixed={"gamma_c": cfg.cavity.gamma_c, "gamma_x": 1.0})
    assert "gamma_c" not in r.params
    assert r.fixed["gamma_c"] == cfg.cavity.gamma_c
    assert r["g"] == pytest.approx(72.0, rel=1e-6)


def test_iteration_cap_flags_result(map0):
    r = fit_anticrossing(map0, max_iter=1)
    assert not r.converged
    assert r.iterations == 1


def test_unknown_model_rejected(map0):
    with pytest.raises(ValueError):
        AnticrossingModel("four_level", map0.tuning)


def _numeric_derivatives(model, p, name):
    h = 1e-6 * max(abs(p[name]), 1.0)
    up, dn = dict(p), dict(p)
    up[name] += h
    dn[name] -= h
    return (model.eig(up)[0].real - model.eig(dn)[0].real) / (2 * h)


@pytest.mark.parametrize("kind", [TWO_LEVEL, V_SYSTEM])
def test_model_jacobian_matches_central_differences(kind, rng):
    t = np.linspace(30.0, 42.0, 25)
    model = AnticrossingModel(kind, t)
    for _ in range(20):
        p = {
            "g": rng.uniform(20, 150), "g_plus": rng.uniform(20, 150), "g_minus": rng.uniform(20, 150),
            # energies measured from an arbitrary origin near the cavity: the
            # model is translation invariant, and at ~1e6 ueV the rounding of
            # the eigenvalues would swamp the 1e-6 difference step
            "Ec": rng.normal(0, 50), "gamma_c": rng.uniform(20, 300), "rate": rng.uniform(-150, -20),
            "t0": rng.uniform(34, 38), "split": rng.uniform(50, 400), "curvature": rng.uniform(-2, 2),
            "gamma_x": rng.uniform(0.5, 10),
        }
        _, d = model.eig(p)
        for name in model.names:
            analytic = np.real(np.broadcast_to(d[name], (t.size, model.n_modes)))
            numeric = _numeric_derivatives(model, p, name)
            scale = max(np.linalg.norm(numeric), 1e-3)
            assert np.linalg.norm(analytic - numeric) <= 1e-4 * scale, name
