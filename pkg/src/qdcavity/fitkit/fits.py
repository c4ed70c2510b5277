"""Parameter estimation: Zeeman branches, anti-crossings, dipole angle."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..polariton import eigvals_2x2, g_from_splitting, sorted_eig, strong_coupling, vsystem_matrix
from ..spectrum import SweepMap
from ..units import CONSTANTS
from .lm import levenberg_marquardt
from .peaks import PeakSet
from .tracking import extract_map_peaks, find_anticrossings, track_branches


class FitError(ValueError):
    """The data cannot support the requested fit."""


class InconsistentPair(ValueError):
    """Coupling pair implies a reduction beyond the aligned-dipole bound."""


@dataclass
class FitResult:
    params: Dict[str, float]
    stderr: Dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    fixed: Dict[str, float] = field(default_factory=dict)
    history: List[float] = field(default_factory=list)
    info: Dict[str, object] = field(default_factory=dict)

    def __getitem__(self, name):
        if name in self.params:
            return self.params[name]
        return self.fixed[name]


# -- Zeeman branches -----------------------------------------------------------

def fit_zeeman(branch_data: Iterable[Sequence[float]]) -> FitResult:
    """Joint linear least-squares fit of both spin branches versus field.

    ``branch_data`` holds ``(B, E_plus, E_minus)`` rows (ueV); a NaN energy
    drops that point.  Returns ``E0``, ``g_diff`` and ``gamma2``.
    """
    rows, y = [], []
    fields = set()
    for B, e_plus, e_minus in branch_data:
        for m, e in ((1, e_plus), (-1, e_minus)):
            if e is None or not np.isfinite(e):
                continue
            rows.append([1.0, -m * B, B * B])
            y.append(e)
            fields.add(float(B))
    if len(fields) < 3:
        raise FitError("need at least three distinct field values")
    X = np.array(rows)
    y = np.array(y)
    if np.linalg.matrix_rank(X) < 3:
        raise FitError("rank-deficient design matrix")
    e_ref = float(np.mean(y))
    coef, *_ = np.linalg.lstsq(X, y - e_ref, rcond=None)
    resid = X @ coef - (y - e_ref)
    dof = len(y) - 3
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    se = np.sqrt(np.clip(np.diag(np.linalg.inv(X.T @ X)) * s2, 0.0, None))
    to_g = 2.0 / CONSTANTS.bohr_magneton
    params = {"E0": coef[0] + e_ref, "g_diff": coef[1] * to_g, "gamma2": coef[2], "gamma1": coef[1]}
    stderr = {"E0": se[0], "g_diff": se[1] * to_g, "gamma2": se[2], "gamma1": se[1]}
    return FitResult(
        {k: float(v) for k, v in params.items()},
        {k: float(v) for k, v in stderr.items()},
        float(np.linalg.norm(resid)),
        True,
        1,
        info={"n_points": len(y)},
    )


def zeeman_branches(sweep: SweepMap, floor: float = 0.05) -> List[tuple]:
    """``(B, E_plus, E_minus)`` rows from a map of bare dot emission.

    The two strongest lines of each spectrum are taken as the spin
    branches, the lower one being +1.  A single line counts for both
    branches only at zero field; other frames without two lines get NaN.
    """
    rows = []
    for b, ps in zip(sweep.tuning, extract_map_peaks(sweep, max_peaks=2, floor=floor)):
        c = ps.centers
        if c.size == 2:
            rows.append((float(b), float(c[0]), float(c[1])))
        elif c.size == 1 and b == 0:
            rows.append((0.0, float(c[0]), float(c[0])))
        else:
            rows.append((float(b), math.nan, math.nan))
    return rows


# -- dipole angle and field series --------------------------------------------

def infer_dipole_angle(g0: float, g_highfield: float) -> float:
    """Dipole angle (rad) implied by a zero-field and a high-field coupling."""
    if not g_highfield > 0:
        raise ValueError("high-field coupling must be positive")
    x = g0 / (math.sqrt(2.0) * g_highfield)
    if x > 1.0 + 1e-12:
        raise InconsistentPair(
            f"g0={g0} and g'={g_highfield} imply a reduction beyond 1/sqrt(2)"
        )
    return math.acos(min(x, 1.0))


@dataclass
class RabiTable:
    fields: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray
    g0: Optional[float] = None

    @property
    def reduction_plus(self) -> Optional[float]:
        """Mean fractional drop of the +1 coupling relative to ``g0``."""
        return None if self.g0 is None else float(np.mean(1.0 - self.g_plus / self.g0))

    @property
    def reduction_minus(self) -> Optional[float]:
        return None if self.g0 is None else float(np.mean(1.0 - self.g_minus / self.g0))

    def rows(self):
        return list(zip(self.fields.tolist(), self.g_plus.tolist(), self.g_minus.tolist()))


def rabi_vs_field(series, gamma_c: float, gamma_x: float, g0: Optional[float] = None) -> RabiTable:
    """Couplings from per-field minimum gaps ``(B, gap_plus, gap_minus)``."""
    fields, gp, gm = [], [], []
    for B, gap_p, gap_m in series:
        fields.append(B)
        gp.append(g_from_splitting(gap_p, gamma_c, gamma_x))
        gm.append(g_from_splitting(gap_m, gamma_c, gamma_x))
    return RabiTable(np.array(fields, float), np.array(gp), np.array(gm), g0)


# -- anti-crossing model fits --------------------------------------------------

TWO_LEVEL = "two_level"
V_SYSTEM = "v_system"

_PARAMS = {
    TWO_LEVEL: ("g", "Ec", "gamma_c", "rate", "t0", "curvature", "gamma_x"),
    V_SYSTEM: ("g_plus", "g_minus", "Ec", "gamma_c", "rate", "t0", "split", "curvature", "gamma_x"),
}
_DEFAULT_FREE = {
    TWO_LEVEL: ("g", "Ec", "gamma_c", "rate", "t0"),
    V_SYSTEM: ("g_plus", "g_minus", "Ec", "gamma_c", "rate", "t0", "split"),
}


class AnticrossingModel:
    """Real parts of the coupled-mode eigenvalues along a tuning axis.

    The bare exciton line moves as ``Ec + rate*u + curvature*u**2`` with
    ``u = t - t0``; in the V system the -1 branch sits ``split`` above the
    +1 branch.  The cavity stays at ``Ec``.
    """

    def __init__(self, kind: str, tuning):
        if kind not in _PARAMS:
            raise ValueError(f"unknown model {kind!r}")
        self.kind = kind
        self.names = _PARAMS[kind]
        self.t = np.asarray(tuning, dtype=float)
        self.n_modes = 2 if kind == TWO_LEVEL else 3

    def eig(self, p: Dict[str, float]):
        """Eigenvalues (n_frames, n_modes) and derivatives w.r.t. every parameter."""
        u = self.t - p["t0"]
        Ex = p["Ec"] + p["rate"] * u + p["curvature"] * u * u
        dEx = {
            "Ec": 1.0,
            "rate": u,
            "t0": -p["rate"] - 2.0 * p["curvature"] * u,
            "curvature": u * u,
        }
        gx, gc = p["gamma_x"], p["gamma_c"]
        if self.kind == TWO_LEVEL:
            return self._eig2(Ex, dEx, p["Ec"], gx, gc, p["g"])
        return self._eig3(Ex, dEx, p, gx, gc)

    def _eig2(self, Ex, dEx, Ec, gx, gc, g):
        lo, hi = eigvals_2x2(Ex, gx, Ec, gc, g)
        lam = np.stack([lo, hi], axis=-1)
        a = (Ex - 0.5j * gx)[:, None]
        c = Ec - 0.5j * gc
        v1x, v1c = np.full_like(lam, g), lam - a
        v2x, v2c = lam - c, np.full_like(lam, g)
        use1 = (np.abs(v1x) + np.abs(v1c)) >= (np.abs(v2x) + np.abs(v2c))
        vx = np.where(use1, v1x, v2x)
        vc = np.where(use1, v1c, v2c)
        norm = vx * vx + vc * vc
        fx = vx * vx / norm  # share of a diagonal perturbation on the exciton
        fc = vc * vc / norm
        d = {
            "g": 2.0 * vx * vc / norm,
            "gamma_c": -0.5j * fc,
            "gamma_x": -0.5j * fx,
        }
        for name, dex in dEx.items():
            dex = np.asarray(dex)[..., None] if np.ndim(dex) else dex
            d[name] = dex * fx + (fc if name == "Ec" else 0.0)
        return lam, d

    def _eig3(self, Ex, dEx, p, gx, gc):
        Em = Ex + p["split"]
        H = vsystem_matrix(Ex, Em, gx, p["Ec"], gc, p["g_plus"], p["g_minus"])
        lam, v = sorted_eig(H)
        norm = np.einsum("fjk,fjk->fk", v, v)
        f = v * v / norm[:, None, :]  # (frame, basis, mode)
        fxs = f[:, 0, :] + f[:, 1, :]
        d = {
            "g_plus": 2.0 * v[:, 0, :] * v[:, 2, :] / norm,
            "g_minus": 2.0 * v[:, 1, :] * v[:, 2, :] / norm,
            "gamma_c": -0.5j * f[:, 2, :],
            "gamma_x": -0.5j * fxs,
            "split": f[:, 1, :],
        }
        for name, dex in dEx.items():
            dex = np.asarray(dex)[..., None] if np.ndim(dex) else dex
            d[name] = dex * fxs + (f[:, 2, :] if name == "Ec" else 0.0)
        return lam, d


def _assign(obs, modes):
    """Order-preserving assignment of observed centers to model modes."""
    n_obs, n_modes = obs.size, modes.size
    if n_obs == n_modes:
        return np.arange(n_modes)
    best, best_cost = None, np.inf
    for sel in itertools.combinations(range(n_modes), n_obs):
        cost = float(np.sum((obs - modes[list(sel)]) ** 2))
        if cost < best_cost:
            best, best_cost = np.array(sel), cost
    return best


def _observations(peaksets: Sequence[PeakSet], n_modes: int):
    frames, centers = [], []
    for i, ps in enumerate(peaksets):
        if not len(ps):
            continue
        c, a = ps.centers, ps.amplitudes
        if c.size > n_modes:
            keep = np.sort(np.argsort(a)[::-1][:n_modes])
            c = c[keep]
        frames.append(i)
        centers.append(np.sort(c))
    return frames, centers


def _rate_magnitude(gap, t, t0, min_gap):
    """|dE/dt| of the bare line from the growth of a pair gap away from t0."""
    dt = np.abs(t - t0)
    ok = (dt > 0) & np.isfinite(gap) & (gap > min_gap * 1.05)
    if not np.any(ok):
        return None
    detuning = np.sqrt(gap[ok] ** 2 - min_gap**2)
    return float(np.median(detuning / dt[ok]))


def fit_anticrossing(
    sweep: SweepMap,
    model: str = TWO_LEVEL,
    fixed: Optional[Dict[str, float]] = None,
    free: Optional[Sequence[str]] = None,
    initial: Optional[Dict[str, float]] = None,
    tuning_window=None,
    energy_window=None,
    max_iter: int = 200,
    peaksets: Optional[List[PeakSet]] = None,
) -> FitResult:
    """Fit coupled-mode real parts to the peak centers of a sweep.

    ``gamma_x`` (1 ueV unless given in ``fixed``) and ``curvature`` (0) are
    held fixed by default.  Starting values come from the detected
    anti-crossings unless supplied in ``initial``.
    """
    if tuning_window is not None or energy_window is not None:
        sweep = sweep.window(tuning_window, energy_window)
        peaksets = None
    fixed = dict(fixed or {})
    fixed.setdefault("gamma_x", 1.0)
    names = _PARAMS[model]
    free = tuple(free) if free is not None else tuple(n for n in _DEFAULT_FREE[model] if n not in fixed)
    for n in names:
        if n not in free and n not in fixed:
            fixed[n] = 0.0 if n == "curvature" else fixed.get(n)
            if fixed[n] is None:
                raise ValueError(f"parameter {n} is neither free nor fixed")

    if peaksets is None:
        peaksets = extract_map_peaks(sweep)
    tracks = track_branches(peaksets)
    found = find_anticrossings(sweep, tracks=tracks)
    starts = _initial_guesses(model, sweep, peaksets, tracks, found, fixed)
    for st in starts:
        st.update(initial or {})
    start = starts[0]

    mdl = AnticrossingModel(model, sweep.tuning)
    n_modes = mdl.n_modes
    frames, centers = _observations(peaksets, n_modes)
    if not frames:
        raise FitError("no peaks found in the sweep")
    frames = np.array(frames)
    obs = np.concatenate(centers)
    e_ref = float(start["Ec"])
    scale = {n: (e_ref if n == "Ec" else 0.0) for n in names}

    def unpack(x):
        p = dict(fixed)
        for n, v in zip(free, x):
            p[n] = v + scale[n]
        return p

    def evaluate(x):
        p = unpack(x)
        lam, d = mdl.eig(p)
        R = lam.real[frames]
        res = np.empty(obs.size)
        J = np.empty((obs.size, len(free)))
        pos = 0
        for k, c in enumerate(centers):
            sel = _assign(c, R[k])
            res[pos:pos + c.size] = R[k, sel] - c
            for j, n in enumerate(free):
                J[pos:pos + c.size, j] = np.real(np.broadcast_to(d[n], lam.shape)[frames[k], sel])
            pos += c.size
        return res, J

    cache = {}

    def fun(x):
        key = x.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = evaluate(x)
        return cache[key][0]

    def jac(x):
        fun(x)
        return cache[x.tobytes()][1]

    # the sign of the tuning rate is not visible in the gaps; keep the
    # candidate start with the lowest cost
    x0 = min(
        (np.array([st[n] - scale[n] for n in free]) for st in starts),
        key=lambda x: float(np.sum(fun(x) ** 2)),
    )

    lm = levenberg_marquardt(fun, x0, jac, max_iter=max_iter)
    p = unpack(lm.x)
    se = lm.standard_errors()
    params = {n: float(p[n]) for n in free}
    for n in ("gamma_c", "g", "g_plus", "g_minus"):
        if n in params:
            params[n] = abs(params[n])
    info = {"model": model, "n_points": int(obs.size), "message": lm.message}
    gc, gx = p["gamma_c"], p["gamma_x"]
    if model == TWO_LEVEL:
        info["strong_coupling"] = strong_coupling(abs(p["g"]), abs(gc), gx)
    else:
        info["strong_coupling_plus"] = strong_coupling(abs(p["g_plus"]), abs(gc), gx)
        info["strong_coupling_minus"] = strong_coupling(abs(p["g_minus"]), abs(gc), gx)
    return FitResult(
        params,
        {n: float(s) for n, s in zip(free, se)},
        lm.residual_norm,
        lm.converged,
        lm.iterations,
        fixed={n: float(v) for n, v in fixed.items() if n not in free},
        history=[float(h) for h in lm.history],
        info=info,
    )


def _pair_gap(tracks, pair):
    a, b = pair
    return np.abs(tracks[b] - tracks[a])


def _fwhm_near(peaksets, frame, energy):
    ps = peaksets[frame]
    if not len(ps):
        return None
    order = np.argsort(np.abs(ps.centers - energy))[:2]
    return float(np.sum(ps.fwhms[order]))


def _initial_guesses(model, sweep, peaksets, tracks, found, fixed):
    """Candidate starting points, one per sign of the tuning rate."""
    t = sweep.tuning
    gx = fixed.get("gamma_x", 1.0)
    span = float(np.ptp(t)) or 1.0
    base = {"curvature": 0.0, "gamma_x": gx}

    if not found:
        # no resolvable anti-crossing: a weakly coupled line crossing the
        # brightest peak in the middle of the window
        bright = [(ps.centers[np.argmax(ps.amplitudes)], ps.fwhms[np.argmax(ps.amplitudes)])
                  for ps in peaksets if len(ps)]
        if not bright:
            raise FitError("no peaks found in the sweep")
        ec, gc = np.median(np.array(bright), axis=0)
        rate = float(np.ptp(sweep.energies)) / (2.0 * span)
        common = {**base, "Ec": float(ec), "gamma_c": float(gc), "t0": float(np.median(t))}
        if model == TWO_LEVEL:
            common["g"] = gc / 8.0
        else:
            common.update(g_plus=gc / 8.0, g_minus=gc / 8.0, split=rate * span / 4.0)
        return [{**common, "rate": s * rate, **fixed} for s in (1.0, -1.0)]

    if model == TWO_LEVEL:
        gmin, tmin, center, frame, pair = min(found, key=lambda f: f[0])
        fw = _fwhm_near(peaksets, frame, center)
        gc = max(fw - gx, 1.0) if fw else 100.0
        rate = _rate_magnitude(_pair_gap(tracks, pair), t, tmin, gmin) or (gmin / span)
        common = {**base, "g": gmin / 2.0, "Ec": center, "gamma_c": gc, "t0": tmin}
        return [{**common, "rate": s * rate, **fixed} for s in (1.0, -1.0)]

    # V system: two anti-crossings ordered along the tuning axis
    if len(found) >= 2:
        first, second = sorted(sorted(found, key=lambda f: f[0])[:2], key=lambda f: f[1])
    else:
        first = second = found[0]
    rates = [_rate_magnitude(_pair_gap(tracks, f[4]), t, f[1], f[0]) for f in (first, second)]
    rates = [r for r in rates if r]
    rate = float(np.mean(rates)) if rates else max(first[0], 1.0) / span
    dt = abs(second[1] - first[1])
    fw = _fwhm_near(peaksets, first[3], first[2])
    common = {
        **base,
        "Ec": 0.5 * (first[2] + second[2]),
        "gamma_c": max(fw - gx, 1.0) if fw else 100.0,
        "split": rate * dt if dt > 0 else first[0],
    }
    # rising lines: the higher (-1) branch reaches the cavity first
    rising = {"rate": rate, "t0": second[1], "g_plus": second[0] / 2.0, "g_minus": first[0] / 2.0}
    falling = {"rate": -rate, "t0": first[1], "g_plus": first[0] / 2.0, "g_minus": second[0] / 2.0}
    return [{**common, **rising, **fixed}, {**common, **falling, **fixed}]
