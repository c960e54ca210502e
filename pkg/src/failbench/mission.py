"""Hilbert-curve flight plans.

The generator follows the classic four-copy recursion in the unit square
centered on the origin: each order transforms the previous order's points
into the four quadrants (transpose into the lower corners, translate into
the upper ones), so order n yields 4^n points with consecutive spacing of
exactly 2^-n.  A mission strings curves of orders 1..4 through a 2x2 grid
of quadrants, one order per quadrant, at constant altitude.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass


def hilbert(n: int) -> list[tuple[float, float]]:
    """Order-n Hilbert curve vertices in [-0.5, 0.5]^2; order <= 0 is the origin."""
    if n <= 0:
        return [(0.0, 0.0)]
    prev = hilbert(n - 1)
    pts = []
    for xx, yy in prev:
        pts.append((0.5 * (-0.5 + yy), 0.5 * (-0.5 + xx)))
    for xx, yy in prev:
        pts.append((0.5 * (-0.5 + xx), 0.5 * (0.5 + yy)))
    for xx, yy in prev:
        pts.append((0.5 * (0.5 + xx), 0.5 * (0.5 + yy)))
    for xx, yy in prev:
        pts.append((0.5 * (0.5 - yy), 0.5 * (-0.5 - xx)))
    return pts


@dataclass(frozen=True)
class FlightPlan:
    """Ordered (north, east, altitude) waypoints plus cruise parameters."""

    waypoints: tuple[tuple[float, float, float], ...]
    cruise_speed: float = 15.0
    acceptance_radius: float = 10.0

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise ValueError("flight plan needs at least 2 waypoints")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a == b:
                raise ValueError(f"consecutive duplicate waypoint {a}")


# quadrant centers in (east, north) half-size units, traversed
# counterclockwise from southwest: SW, SE, NE, NW
_QUADRANTS = ((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5))


def build_flight_plan(orders=(1, 2, 3, 4), quadrant_size: float = 400.0,
                      origin: tuple[float, float] = (0.0, 0.0),
                      altitude: float = 100.0, speed: float = 15.0,
                      acceptance_radius: float = 10.0) -> FlightPlan:
    """One Hilbert curve per quadrant, quadrants joined by straight legs.

    Curve x maps to east and y to north; quadrant k of the 2x2 grid holds
    the order-k curve, scaled so each curve spans its own quadrant.
    """
    if quadrant_size <= 0:
        raise ValueError("quadrant_size must be positive")
    wps = []
    for order, (qx, qy) in zip(orders, _QUADRANTS):
        cx = origin[1] + qx * quadrant_size  # east
        cy = origin[0] + qy * quadrant_size  # north
        for x, y in hilbert(order):
            wps.append((cy + y * quadrant_size, cx + x * quadrant_size, altitude))
    return FlightPlan(waypoints=tuple(wps), cruise_speed=speed,
                      acceptance_radius=acceptance_radius)


def plan_length(plan: FlightPlan) -> float:
    total = 0.0
    for a, b in zip(plan.waypoints, plan.waypoints[1:]):
        total += ((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2) ** 0.5
    return total


def save_plan_csv(plan: FlightPlan, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_index", "north", "east", "alt"])
        for i, (n, e, a) in enumerate(plan.waypoints):
            writer.writerow([i, repr(n), repr(e), repr(a)])


def load_plan_csv(path: str, speed: float = 15.0,
                  acceptance_radius: float = 10.0) -> FlightPlan:
    wps = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            wps.append((float(row["north"]), float(row["east"]), float(row["alt"])))
    return FlightPlan(waypoints=tuple(wps), cruise_speed=speed,
                      acceptance_radius=acceptance_radius)
