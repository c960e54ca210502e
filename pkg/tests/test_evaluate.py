"""Resampling and DTW, including the exhaustive warping-path oracle."""

import math

import numpy as np
import pytest

from failbench.evaluate import (DegeneratePlan, EmptyInput, Source,
                                Trajectory, TrajectoryError, dtw_distance,
                                dtw_normalized, from_waypoints, resample)


def traj(points) -> Trajectory:
    """1-D or 3-D point list to a Trajectory (1-D values go on the north axis)."""
    pts = [(p, 0.0, 0.0) if isinstance(p, (int, float)) else tuple(p)
           for p in points]
    return Trajectory(t=np.arange(len(pts), dtype=float), xyz=np.asarray(pts))


def brute_force_dtw(x: np.ndarray, y: np.ndarray) -> float:
    """Minimum cost over every monotone warping path, by full enumeration.

    Independent of the DP: walks all (down, right, diagonal) step sequences
    from (0, 0) to (m-1, n-1) and accumulates Euclidean distances.
    """
    m, n = len(x), len(y)

    def dist(i, j):
        d = x[i] - y[j]
        return math.sqrt(float(np.dot(d, d)))

    best = [math.inf]

    def walk(i, j, acc):
        acc = acc + dist(i, j)
        if i == m - 1 and j == n - 1:
            if acc < best[0]:
                best[0] = acc
            return
        if i + 1 < m:
            walk(i + 1, j, acc)
        if j + 1 < n:
            walk(i, j + 1, acc)
        if i + 1 < m and j + 1 < n:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return best[0]


class TestResample:
    def test_idempotent_on_uniform_plan(self):
        plan = traj([(0, 0, 0), (10, 0, 0), (20, 0, 0), (30, 0, 0)])
        out = resample(plan, 4)
        assert np.abs(out.xyz - plan.xyz).max() <= 1e-12

    def test_midpoint_insertion(self):
        plan = traj([(0, 0, 0), (10, 0, 0)])
        out = resample(plan, 3)
        assert out.xyz[1] == pytest.approx([5.0, 0.0, 0.0], abs=1e-12)

    def test_endpoints_preserved(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(7, 3)) * 50
        plan = Trajectory(t=np.arange(7.0), xyz=pts)
        for n_out in (2, 5, 50):
            out = resample(plan, n_out)
            assert np.abs(out.xyz[0] - pts[0]).max() <= 1e-12
            assert np.abs(out.xyz[-1] - pts[-1]).max() <= 1e-12

    def test_uniform_arc_length(self):
        # straight line with lopsided input spacing: output spacing evens out
        plan = traj([(0, 0, 0), (1, 0, 0), (100, 0, 0), (101, 0, 0)])
        out = resample(plan, 25)
        seg = np.linalg.norm(np.diff(out.xyz, axis=0), axis=1)
        assert np.abs(seg - seg[0]).max() <= 1e-9

    def test_degenerate_plan(self):
        plan = Trajectory(t=np.array([0.0, 1.0]),
                          xyz=np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]))
        with pytest.raises(DegeneratePlan):
            resample(plan, 5)

    def test_bad_sizes(self):
        plan = traj([(0, 0, 0), (1, 0, 0)])
        with pytest.raises(TrajectoryError):
            resample(plan, 1)


class TestDtw:
    def test_identical_is_zero(self):
        x = traj([(0, 0, 0), (3, 1, 0), (5, 5, 2)])
        assert dtw_distance(x, x) == 0.0

    def test_hand_example(self):
        # 3x2 table: align 0-0, 1-?, 2-2; the middle point costs 1 either way
        x, y = traj([0, 1, 2]), traj([0, 2])
        assert dtw_distance(x, y) == pytest.approx(1.0, abs=1e-12)
        assert brute_force_dtw(x.xyz, y.xyz) == pytest.approx(1.0, abs=1e-12)

    def test_single_pair(self):
        assert dtw_distance(traj([(0, 0, 0)]), traj([(3, 4, 0)])) == 5.0

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            x = traj(rng.normal(size=(rng.integers(1, 8), 3)))
            y = traj(rng.normal(size=(rng.integers(1, 8), 3)))
            assert dtw_distance(x, y) == pytest.approx(dtw_distance(y, x), abs=1e-12)

    def test_non_negative(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            x = traj(rng.normal(size=(rng.integers(1, 6), 3)))
            y = traj(rng.normal(size=(rng.integers(1, 6), 3)))
            assert dtw_distance(x, y) >= 0.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            m, n = rng.integers(1, 7), rng.integers(1, 7)
            if rng.random() < 0.5:
                x, y = traj(rng.normal(size=m) * 10), traj(rng.normal(size=n) * 10)
            else:
                x = traj(rng.normal(size=(m, 3)) * 10)
                y = traj(rng.normal(size=(n, 3)) * 10)
            assert dtw_distance(x, y) == pytest.approx(
                brute_force_dtw(x.xyz, y.xyz), abs=1e-12)

    def test_band_equals_full_when_wide(self):
        rng = np.random.default_rng(6)
        x = traj(rng.normal(size=(9, 3)))
        y = traj(rng.normal(size=(6, 3)))
        full = dtw_distance(x, y)
        assert dtw_distance(x, y, window=max(len(x), len(y))) == full

    def test_band_restricts(self):
        x = traj([0, 0, 0, 10])
        y = traj([0, 10, 10, 10])
        assert dtw_distance(x, y, window=3) >= dtw_distance(x, y)

    def test_infeasible_band_rejected(self):
        x, y = traj([0, 1, 2, 3, 4]), traj([0, 1])
        with pytest.raises(TrajectoryError):
            dtw_distance(x, y, window=1)

    def test_empty_input(self):
        x = traj([0, 1])
        empty = Trajectory(t=np.empty(0), xyz=np.empty((0, 3)))
        with pytest.raises(EmptyInput):
            dtw_distance(x, empty)

    def test_numba_path_matches_python(self):
        # above the size threshold the compiled kernel takes over
        rng = np.random.default_rng(8)
        x = traj(rng.normal(size=(150, 3)))
        y = traj(rng.normal(size=(140, 3)))
        from failbench.evaluate import _dtw_py
        assert dtw_distance(x, y) == pytest.approx(
            _dtw_py(x.xyz, y.xyz, -1), rel=1e-12)

    def test_normalized(self):
        x, y = traj([0, 1, 2]), traj([0, 2])
        assert dtw_normalized(x, y) == pytest.approx(1.0 / 5.0, abs=1e-12)


class TestTrajectory:
    def test_invariants(self):
        with pytest.raises(TrajectoryError):
            Trajectory(t=np.array([0.0, 0.0]), xyz=np.zeros((2, 3)))
        with pytest.raises(TrajectoryError):
            Trajectory(t=np.array([0.0]), xyz=np.array([[np.nan, 0, 0]]))
        with pytest.raises(TrajectoryError):
            Trajectory(t=np.array([0.0]), xyz=np.zeros((2, 3)))

    def test_from_waypoints(self):
        tr = from_waypoints([(0, 0, 100), (150, 0, 100)], speed=15.0)
        assert tr.source is Source.PLAN
        assert tr.t[-1] == pytest.approx(10.0, abs=1e-6)
