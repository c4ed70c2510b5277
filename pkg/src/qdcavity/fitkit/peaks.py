"""Peak extraction: local maxima refined by a joint multi-Lorentzian fit."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.signal import find_peaks, peak_widths

from ..spectrum import Spectrum
from .lm import levenberg_marquardt


@dataclass(frozen=True)
class Peak:
    center: float  # ueV
    fwhm: float
    amplitude: float
    center_uncertainty: float
    refined: bool = True


class PeakSet(list):
    """Peaks of one spectrum, ordered by center."""

    @property
    def centers(self) -> np.ndarray:
        return np.array([p.center for p in self])

    @property
    def fwhms(self) -> np.ndarray:
        return np.array([p.fwhm for p in self])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self])


def noise_level(y) -> float:
    """Robust white-noise estimate from second differences."""
    d2 = np.diff(np.asarray(y, dtype=float), 2)
    if d2.size == 0:
        return 0.0
    return float(np.median(np.abs(d2 - np.median(d2))) / 0.6745 / np.sqrt(6.0))


def _multi_lorentzian(E, p):
    out = np.zeros_like(E)
    for c, w, a in p.reshape(-1, 3):
        hw2 = 0.25 * w * w
        out += a * hw2 / ((E - c) ** 2 + hw2)
    return out


def _multi_lorentzian_jac(E, p):
    cols = []
    for c, w, a in p.reshape(-1, 3):
        hw2 = 0.25 * w * w
        u = E - c
        den = u * u + hw2
        L = hw2 / den
        cols.append(a * 2.0 * u * hw2 / den**2)  # d/dc
        cols.append(a * 0.5 * w * u * u / den**2)  # d/dw
        cols.append(L)  # d/da
    return np.column_stack(cols)


def _fit_lorentzians(E, y, centers, widths, amps):
    origin = np.asarray(centers, dtype=float)
    p0 = np.column_stack([np.zeros(origin.size), widths, amps]).ravel()

    def shifted(p):
        q = p.reshape(-1, 3).copy()
        q[:, 0] += origin
        return q.ravel()

    fit = levenberg_marquardt(
        lambda p: _multi_lorentzian(E, shifted(p)) - y,
        p0,
        lambda p: _multi_lorentzian_jac(E, shifted(p)),
    )
    return fit, shifted(fit.x).reshape(-1, 3), fit.standard_errors().reshape(-1, 3)[:, 0]


def extract_peaks(spectrum: Spectrum, max_peaks: int = 4, floor: float = 0.05,
                  prominence: float = 0.02, max_hidden: int = 2) -> PeakSet:
    """Find and refine Lorentzian peaks.

    Candidates are local maxima higher than ``floor`` times the spectrum
    maximum and more prominent than ``prominence`` times it (or five times
    the estimated noise, whichever is larger).  At most ``max_peaks`` of the
    highest candidates are refined together by least squares.  Weaker lines
    left in the fit residual (up to ``max_hidden``) are added to the model so
    they do not pull the reported centers, but are not reported.
    """
    E = spectrum.energies
    y = spectrum.intensities
    ymax = float(y.max()) if y.size else 0.0
    if ymax <= 0 or ymax - float(y.min()) <= 1e-12 * ymax:
        return PeakSet()
    step = float(np.median(np.diff(E)))

    sigma = noise_level(y)
    search = y
    if sigma > 1e-4 * ymax:
        search = gaussian_filter1d(y, 2.0)
    prom = max(prominence * ymax, 5.0 * sigma)
    idx, _ = find_peaks(search, height=floor * ymax, prominence=prom)
    if idx.size == 0:
        return PeakSet()
    if idx.size > max_peaks:
        idx = np.sort(idx[np.argsort(search[idx])[::-1][:max_peaks]])
    widths = np.maximum(peak_widths(search, idx, rel_height=0.5)[0] * step, 2 * step)

    centers, fw, amps = list(E[idx]), list(widths), list(y[idx])
    fit, q, errs = _fit_lorentzians(E, y, centers, fw, amps)
    hidden_floor = max(1e-3 * ymax, 5.0 * sigma)
    for _ in range(max_hidden):
        resid = y - _multi_lorentzian(E, q.ravel())
        if sigma > 1e-4 * ymax:
            resid = gaussian_filter1d(resid, 2.0)
        extra, _ = find_peaks(resid, height=hidden_floor, prominence=hidden_floor)
        if extra.size == 0:
            break
        k = extra[np.argmax(resid[extra])]
        w = max(peak_widths(resid, [k], rel_height=0.5)[0][0] * step, 2 * step)
        trial, tq, terrs = _fit_lorentzians(
            E, y, list(q[:, 0]) + [E[k]], list(np.abs(q[:, 1])) + [w], list(q[:, 2]) + [resid[k]]
        )
        if not trial.residual_norm < fit.residual_norm:
            break
        fit, q, errs = trial, tq, terrs

    lo, hi = E[0], E[-1]
    peaks = []
    for k, (c, w, a) in enumerate(q):
        if k >= idx.size:
            continue  # hidden line
        ok = fit.converged and lo <= c <= hi and a > 0 and abs(w) > 0
        if ok:
            err = errs[k] if np.isfinite(errs[k]) else step
            peaks.append(Peak(float(c), float(abs(w)), float(a), float(err), True))
        else:
            i = idx[k]
            peaks.append(Peak(float(E[i]), float(widths[k]), float(y[i]), step, False))
    peaks.sort(key=lambda p: p.center)
    return PeakSet(peaks)
