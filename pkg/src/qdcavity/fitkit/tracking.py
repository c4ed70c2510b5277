"""Branch tracking across a sweep and anti-crossing detection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..exciton import SpinBranch
from ..spectrum import SweepMap
from .peaks import PeakSet, extract_peaks


class NoAntiCrossing(ValueError):
    """The tracked branches never show an interior gap minimum."""


@dataclass(frozen=True)
class AntiCrossing:
    tuning_value_at_min: float
    min_gap: float  # ueV
    branch: Optional[SpinBranch]  # None for the degenerate zero-field exciton
    center_energy: float  # midpoint of the pair at the minimum
    frame: int  # grid index closest to the minimum

    @property
    def branch_label(self) -> str:
        if self.branch is None:
            return "degenerate"
        return self.branch.name.lower()


def extract_map_peaks(sweep: SweepMap, max_peaks: int = 4, floor: float = 0.05) -> List[PeakSet]:
    return [extract_peaks(sweep.spectrum(i), max_peaks=max_peaks, floor=floor) for i in range(len(sweep))]


def _step_scale(peaksets: Sequence[PeakSet]) -> float:
    """Median over frame pairs of the largest nearest-neighbour peak shift."""
    shifts = []
    for a, b in zip(peaksets[:-1], peaksets[1:]):
        if len(a) and len(b):
            d = np.abs(b.centers[:, None] - a.centers[None, :]).min(axis=1)
            shifts.append(d.max())
    return float(np.median(shifts)) if shifts else 0.0


def track_branches(peaksets: Sequence[PeakSet], max_jump_factor: float = 3.0,
                   min_jump: float = 1.0, max_gap_frames: int = 2) -> np.ndarray:
    """Link peaks frame to frame by nearest-neighbour continuation.

    Returns an array of shape (n_tracks, n_frames) holding peak centers,
    NaN where a track has no peak.  A link is refused when the jump from
    the predicted position exceeds ``max_jump_factor`` times the median
    inter-frame shift (at least ``min_jump``).  Tracks are ordered by their
    mean energy.
    """
    n = len(peaksets)
    gate = max(max_jump_factor * _step_scale(peaksets), min_jump)
    tracks: list = []  # each: dict(values=list, last=int)
    for i, ps in enumerate(peaksets):
        centers = ps.centers
        live = [t for t in tracks if i - t["last"] <= max_gap_frames + 1]
        taken = set()
        if live and centers.size:
            pred = np.array([_predict(t, i) for t in live])
            cost = np.abs(pred[:, None] - centers[None, :])
            # small penalty for order inversions keeps ties ordered
            rank_t = np.argsort(np.argsort(pred))
            rank_p = np.arange(centers.size)
            cost = cost + 1e-9 * gate * np.abs(rank_t[:, None] - rank_p[None, :])
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols):
                if cost[r, c] <= gate:
                    live[r]["values"][i] = centers[c]
                    live[r]["last"] = i
                    taken.add(c)
        for c in range(centers.size):
            if c not in taken:
                values = [np.nan] * n
                values[i] = centers[c]
                tracks.append({"values": values, "last": i})
    if not tracks:
        return np.empty((0, n))
    arr = np.array([t["values"] for t in tracks], dtype=float)
    return arr[np.argsort(np.nanmean(arr, axis=1))]


def _predict(track, i):
    vals = track["values"]
    idx = [k for k in range(i) if not np.isnan(vals[k])]
    if len(idx) >= 2 and idx[-1] - idx[-2] == 1 and idx[-1] == i - 1:
        return 2 * vals[idx[-1]] - vals[idx[-2]]
    return vals[idx[-1]]


def _parabolic_min(x, y):
    """Vertex of the parabola through three points; falls back to the middle."""
    a, b, c = np.polyfit(x - x[1], y, 2)
    if a <= 0:
        return x[1], y[1]
    x0 = -b / (2 * a)
    if not (x[0] - x[1] <= x0 <= x[2] - x[1]):
        return x[1], y[1]
    return x0 + x[1], c - b * b / (4 * a)


def find_anticrossings(sweep: SweepMap, tracks: Optional[np.ndarray] = None,
                       peaksets: Optional[List[PeakSet]] = None, floor: float = 0.05) -> list:
    """All interior gap minima between energy-adjacent tracks.

    Returns a list of ``(min_gap, tuning, center, frame, (a, b))`` tuples
    sorted by tuning value, where ``a`` and ``b`` index the track pair.
    """
    if tracks is None:
        if peaksets is None:
            peaksets = extract_map_peaks(sweep, floor=floor)
        tracks = track_branches(peaksets)
    t = sweep.tuning
    found = []
    for a in range(len(tracks)):
        for b in range(a + 1, len(tracks)):
            both = ~np.isnan(tracks[a]) & ~np.isnan(tracks[b])
            idx = np.flatnonzero(both)
            if idx.size < 3:
                continue
            lo = np.minimum(tracks[a, idx], tracks[b, idx])
            hi = np.maximum(tracks[a, idx], tracks[b, idx])
            # skip pairs with another track sitting between them
            between = False
            for c in range(len(tracks)):
                if c in (a, b):
                    continue
                v = tracks[c, idx]
                if np.any((v > lo) & (v < hi)):
                    between = True
                    break
            if between:
                continue
            gap = hi - lo
            k = int(np.argmin(gap))
            if k == 0 or k == idx.size - 1:
                continue
            if idx[k + 1] - idx[k - 1] != 2:
                continue
            x = t[idx[k - 1:k + 2]]
            tmin, gmin = _parabolic_min(x, gap[k - 1:k + 2])
            mid = 0.5 * (lo + hi)
            cmid = float(np.interp(tmin, x if x[0] < x[-1] else x[::-1],
                                   mid[k - 1:k + 2] if x[0] < x[-1] else mid[k - 1:k + 2][::-1]))
            found.append((float(gmin), float(tmin), cmid, int(idx[k]), (a, b)))
    found.sort(key=lambda f: f[1])
    return found


def detect_anticrossing(sweep: SweepMap, branch: Optional[SpinBranch] = None,
                        floor: float = 0.05) -> AntiCrossing:
    """Locate the smallest anti-crossing gap in ``sweep``.

    Raises :class:`NoAntiCrossing` when no pair of tracked branches has an
    interior gap minimum.
    """
    found = find_anticrossings(sweep, floor=floor)
    if not found:
        raise NoAntiCrossing("no anti-crossing found: branches never reach an interior gap minimum")
    gmin, tmin, center, frame, _ = min(found, key=lambda f: f[0])
    return AntiCrossing(tmin, gmin, branch, center, frame)
