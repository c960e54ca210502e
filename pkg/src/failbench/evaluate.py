"""Trajectory comparison: arc-length resampling and dynamic time warping.

DTW accumulates unnormalized Euclidean point distances over the classic
three-move dynamic program; an optional Sakoe-Chiba band of half-width w
treats cells with |i - j| > w as unreachable.  Both the raw sum (meters)
and a warp-length-normalized value are reported by the harness, since
either convention appears in path-tracking write-ups.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a normal dependency
    njit = None


class TrajectoryError(ValueError):
    pass


class DegeneratePlan(TrajectoryError):
    """Zero total arc length; nothing to resample."""


class EmptyInput(TrajectoryError):
    pass


class Source(Enum):
    PLAN = "plan"
    FLOWN = "flown"


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped position samples (t, north, east, alt)."""

    t: np.ndarray
    xyz: np.ndarray                 # shape (n, 3): north, east, alt
    source: Source = Source.FLOWN

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "xyz", np.asarray(self.xyz, dtype=float))
        if self.xyz.ndim != 2 or self.xyz.shape[1] != 3:
            raise TrajectoryError("xyz must be (n, 3)")
        if len(self.t) != len(self.xyz):
            raise TrajectoryError("t and xyz length mismatch")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise TrajectoryError("t must be strictly increasing")
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.xyz))):
            raise TrajectoryError("non-finite trajectory sample")

    def __len__(self) -> int:
        return len(self.t)


def from_waypoints(waypoints, speed: float = 15.0,
                   source: Source = Source.PLAN) -> Trajectory:
    """Waypoint list to a trajectory, timestamping by arc length / speed."""
    xyz = np.asarray(waypoints, dtype=float)
    seg = np.linalg.norm(np.diff(xyz, axis=0), axis=1)
    t = np.concatenate([[0.0], np.cumsum(seg)]) / max(speed, 1e-9)
    # arc-length time stamps can repeat on zero-length legs; nudge them apart
    t = t + np.arange(len(t)) * 1e-9
    return Trajectory(t=t, xyz=xyz, source=source)


def resample(plan: Trajectory, n_out: int) -> Trajectory:
    """Arc-length-uniform linear resampling to n_out samples.

    Endpoints are preserved exactly; interior samples sit at equal arc-length
    increments along the polyline.
    """
    if len(plan) < 2:
        raise TrajectoryError("plan needs at least 2 samples")
    if n_out < 2:
        raise TrajectoryError("n_out must be at least 2")
    seg = np.linalg.norm(np.diff(plan.xyz, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total <= 0.0:
        raise DegeneratePlan("plan has zero arc length")
    targets = np.linspace(0.0, total, n_out)
    out = np.empty((n_out, 3))
    out[0] = plan.xyz[0]
    out[-1] = plan.xyz[-1]
    idx = np.searchsorted(s, targets[1:-1], side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    frac = (targets[1:-1] - s[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    out[1:-1] = plan.xyz[idx] + frac[:, None] * (plan.xyz[idx + 1] - plan.xyz[idx])
    t = np.interp(targets, s, plan.t)
    t = t + np.arange(n_out) * 1e-9
    return Trajectory(t=t, xyz=out, source=plan.source)


def _dtw_py(x: np.ndarray, y: np.ndarray, band: int) -> float:
    m, n = len(x), len(y)
    inf = float("inf")
    prev = [inf] * (n + 1)
    prev[0] = 0.0
    for i in range(1, m + 1):
        cur = [inf] * (n + 1)
        xi = x[i - 1]
        lo = 1 if band < 0 else max(1, i - band)
        hi = n if band < 0 else min(n, i + band)
        for j in range(lo, hi + 1):
            d = xi - y[j - 1]
            cost = float(np.sqrt(np.dot(d, d)))
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = cost + best
        prev = cur
    return prev[n]


if njit is not None:

    @njit(cache=False)
    def _dtw_nb(x, y, band):  # pragma: no cover - exercised via dtw_distance
        m, n = x.shape[0], y.shape[0]
        inf = np.inf
        prev = np.full(n + 1, inf)
        cur = np.full(n + 1, inf)
        prev[0] = 0.0
        for i in range(1, m + 1):
            for j in range(n + 1):
                cur[j] = inf
            lo, hi = 1, n
            if band >= 0:
                if i - band > 1:
                    lo = i - band
                if i + band < n:
                    hi = i + band
            for j in range(lo, hi + 1):
                dx = x[i - 1, 0] - y[j - 1, 0]
                dy = x[i - 1, 1] - y[j - 1, 1]
                dz = x[i - 1, 2] - y[j - 1, 2]
                cost = np.sqrt(dx * dx + dy * dy + dz * dz)
                best = prev[j]
                if prev[j - 1] < best:
                    best = prev[j - 1]
                if cur[j - 1] < best:
                    best = cur[j - 1]
                cur[j] = cost + best
            prev, cur = cur, prev
        return prev[n]


def dtw_distance(x: Trajectory, y: Trajectory, window: int | None = None) -> float:
    """DTW distance in meters between two trajectories.

    `window` is an optional Sakoe-Chiba half-band in samples; None runs the
    full quadratic table.
    """
    if len(x) == 0 or len(y) == 0:
        raise EmptyInput("empty trajectory")
    band = -1 if window is None else int(window)
    if window is not None and band < abs(len(x) - len(y)):
        raise TrajectoryError(
            f"band {band} cannot reach the corner of a {len(x)}x{len(y)} table")
    xa = np.ascontiguousarray(x.xyz)
    ya = np.ascontiguousarray(y.xyz)
    if njit is not None and len(x) * len(y) > 10_000:
        return float(_dtw_nb(xa, ya, band))
    return _dtw_py(xa, ya, band)


def dtw_normalized(x: Trajectory, y: Trajectory, window: int | None = None) -> float:
    """DTW divided by m + n: meters per warp step, robust to sample count."""
    return dtw_distance(x, y, window) / (len(x) + len(y))
