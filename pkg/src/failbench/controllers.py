"""PX4-style cascaded controller.

Outer loop (50 Hz): PI altitude-to-pitch and airspeed-to-throttle plus a
pure-pursuit lateral law that banks toward a lookahead point on the active
plan segment.  Inner loop (250 Hz): proportional attitude-to-rate stage,
algebraic coordinated-turn yaw rate, Euler-to-body rate transform, and a
feedforward + PI angular-acceleration stage with airspeed scaling and an
anti-windup clamp on the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .plant import AircraftState, clamp


class AirspeedTooLow(Exception):
    """Below the coordinated-turn airspeed floor; caller holds yaw rate at 0."""


@dataclass
class AttitudeGains:
    """The 11 tuned inner-loop variables plus integrator state and limits.

    Vector gains are ordered (roll, pitch, yaw).  `integ` accumulates the
    integral contribution k_i * e * dt directly in rad/s^2 and is clamped to
    +-integrator_limit.
    """

    k_theta: float = 3.0
    k_phi: float = 3.5
    k_ff: tuple[float, float, float] = (0.4, 0.4, 0.4)
    k_p: tuple[float, float, float] = (8.0, 8.0, 6.0)
    k_i: tuple[float, float, float] = (4.0, 4.0, 2.0)
    integrator_limit: float = 0.4
    bank_limit: float = math.radians(50.0)
    v_min: float = 3.0
    integ: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])

    def reset(self, integ: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> None:
        self.integ = [clamp(v, -self.integrator_limit, self.integrator_limit)
                      for v in integ]


@dataclass
class Setpoints:
    """Cascade outputs, from outer-loop demands down to angular acceleration."""

    T_s: float = 0.0
    theta_s: float = 0.0
    phi_s: float = 0.0
    thetadot_s: float = 0.0
    phidot_s: float = 0.0
    psidot_s: float = 0.0
    omega_s: tuple[float, float, float] = (0.0, 0.0, 0.0)
    alpha_s: tuple[float, float, float] = (0.0, 0.0, 0.0)


def rate_setpoints(theta_s: float, phi_s: float, theta_m: float, phi_m: float,
                   gains: AttitudeGains) -> tuple[float, float]:
    """Proportional attitude loop: rate demands from attitude errors."""
    return (gains.k_theta * (theta_s - theta_m), gains.k_phi * (phi_s - phi_m))


def coordinated_turn_yaw_rate(phi_s: float, theta_s: float, v_tas: float,
                              g: float, v_min: float = 3.0) -> float:
    """Yaw rate that balances lateral acceleration at the commanded bank."""
    if v_tas < v_min:
        raise AirspeedTooLow(f"v_tas={v_tas:.2f} below {v_min}")
    return g * math.tan(phi_s) * math.cos(theta_s) / v_tas


def euler_rates_to_body(phi: float, theta: float,
                        euler_rates: tuple[float, float, float]) -> tuple[float, float, float]:
    """Map (roll, pitch, yaw) Euler-angle rates to body angular velocity."""
    phid, thetad, psid = euler_rates
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    return (
        phid + sth * psid,
        cphi * thetad + sphi * cth * psid,
        -sphi * thetad + cphi * cth * psid,
    )


def angular_accel_setpoint(omega_s: tuple[float, float, float],
                           omega_m: tuple[float, float, float],
                           v_tas: float, v_ias: float,
                           trim_tas: float, trim_ias: float,
                           gains: AttitudeGains, dt: float) -> tuple[float, float, float]:
    """Feedforward + PI rate loop with dynamic-pressure scaling.

    The integral term is a forward-Euler sum of k_i * e * dt, clamped to the
    configured limit before use (anti-windup), and the whole PI output is
    scaled by the squared indicated-airspeed ratio.
    """
    r_tas = trim_tas / v_tas
    r_ias2 = (trim_ias / v_ias) ** 2
    lim = gains.integrator_limit
    out = []
    for i in range(3):
        e = omega_s[i] - omega_m[i]
        acc = clamp(gains.integ[i] + gains.k_i[i] * e * dt, -lim, lim)
        gains.integ[i] = acc
        out.append(r_tas * gains.k_ff[i] * omega_s[i] + r_ias2 * (gains.k_p[i] * e + acc))
    return tuple(out)


@dataclass
class PositionGains:
    """Outer-loop gains, limits, and PI integrator state."""

    kp_alt: float = 0.035           # rad of pitch per m of altitude error
    ki_alt: float = 0.006
    theta_max: float = math.radians(25.0)
    kp_speed: float = 0.08          # throttle per m/s of airspeed error
    ki_speed: float = 0.02
    lookahead: float = 45.0         # m along the plan
    trim_pitch: float = 0.0
    trim_throttle: float = 0.0
    integ_alt: float = 0.0
    integ_speed: float = 0.0

    def reset(self) -> None:
        self.integ_alt = 0.0
        self.integ_speed = 0.0


@dataclass(frozen=True)
class PlanSegment:
    """Active leg of the flight plan plus the pursuit point ahead on the path."""

    a: tuple[float, float, float]
    b: tuple[float, float, float]
    lookahead: tuple[float, float, float]


def position_controller(segment: PlanSegment, state: AircraftState,
                        cfg: PositionGains, cruise_speed: float, g: float,
                        dt: float, bank_limit: float) -> tuple[float, float, float]:
    """Outer loop: thrust, pitch, and roll demands from the active segment.

    Altitude error maps to a pitch offset from trim via PI, airspeed error to
    a throttle offset via PI, and the lateral pure-pursuit acceleration
    toward the lookahead point maps to a bank angle (left target, left bank).
    """
    alt_target = segment.b[2]
    alt_err = alt_target - state.altitude
    cfg.integ_alt = clamp(cfg.integ_alt + cfg.ki_alt * alt_err * dt,
                          -cfg.theta_max, cfg.theta_max)
    theta_s = clamp(cfg.trim_pitch + cfg.kp_alt * alt_err + cfg.integ_alt,
                    -cfg.theta_max, cfg.theta_max)

    v_err = cruise_speed - state.v_tas
    cfg.integ_speed = clamp(cfg.integ_speed + cfg.ki_speed * v_err * dt, -1.0, 1.0)
    T_s = clamp(cfg.trim_throttle + cfg.kp_speed * v_err + cfg.integ_speed, 0.0, 1.0)

    # course from ground velocity, falling back to heading at low speed
    u, v, w = state.vel
    phi, theta, psi = state.att
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    spsi, cpsi = math.sin(psi), math.cos(psi)
    vn = cth * cpsi * u + (sphi * sth * cpsi - cphi * spsi) * v \
        + (cphi * sth * cpsi + sphi * spsi) * w
    ve = cth * spsi * u + (sphi * sth * spsi + cphi * cpsi) * v \
        + (cphi * sth * spsi - sphi * cpsi) * w
    gs = math.hypot(vn, ve)
    course = math.atan2(ve, vn) if gs > 1.0 else psi

    dn = segment.lookahead[0] - state.pos[0]
    de = segment.lookahead[1] - state.pos[1]
    dist = math.hypot(dn, de)
    if dist > 1e-6:
        eta = _wrap(math.atan2(de, dn) - course)
        v_eff = max(state.v_tas, 1.0)
        # fixed-lookahead denominator keeps full authority when far off path
        a_lat = 2.0 * v_eff * v_eff * math.sin(eta) / max(cfg.lookahead, 1.0)
        phi_s = clamp(math.atan(a_lat / g), -bank_limit, bank_limit)
    else:
        phi_s = 0.0
    return T_s, theta_s, phi_s


def _wrap(x: float) -> float:
    while x > math.pi:
        x -= 2.0 * math.pi
    while x < -math.pi:
        x += 2.0 * math.pi
    return x


class PlanTracker:
    """Sequential waypoint tracker with pass-by advancement.

    Advances to the next leg when the aircraft is inside the acceptance
    radius of the leg's end waypoint or its along-track projection has
    passed it.  `done` latches once the final waypoint is reached.
    """

    def __init__(self, waypoints: list[tuple[float, float, float]],
                 acceptance_radius: float, lookahead: float):
        if len(waypoints) < 2:
            raise ValueError("need at least 2 waypoints")
        self.wp = waypoints
        self.r_acc = acceptance_radius
        self.lookahead = lookahead
        self.idx = 1                # current target waypoint
        self.done = False

    def segment(self, state: AircraftState) -> PlanSegment:
        pos = state.pos
        while not self.done:
            a, b = self.wp[self.idx - 1], self.wp[self.idx]
            if self._passed(pos, a, b):
                if self.idx == len(self.wp) - 1:
                    self.done = True
                else:
                    self.idx += 1
                continue
            break
        a, b = self.wp[self.idx - 1], self.wp[self.idx]
        return PlanSegment(a=a, b=b, lookahead=self._carrot(pos))

    def _passed(self, pos, a, b) -> bool:
        dx = (b[0] - pos[0], b[1] - pos[1])
        if math.hypot(*dx) <= self.r_acc:
            return True
        seg = (b[0] - a[0], b[1] - a[1])
        seg_len2 = seg[0] * seg[0] + seg[1] * seg[1]
        if seg_len2 <= 0:
            return True
        s = ((pos[0] - a[0]) * seg[0] + (pos[1] - a[1]) * seg[1]) / seg_len2
        return s >= 1.0

    def _carrot(self, pos) -> tuple[float, float, float]:
        """Point `lookahead` meters along the plan from the projection of pos."""
        i = self.idx
        a, b = self.wp[i - 1], self.wp[i]
        seg = (b[0] - a[0], b[1] - a[1])
        seg_len = math.hypot(*seg)
        if seg_len > 0:
            s = ((pos[0] - a[0]) * seg[0] + (pos[1] - a[1]) * seg[1]) / seg_len
            s = clamp(s, 0.0, seg_len)
        else:
            s = 0.0
        remain = self.lookahead
        while True:
            left = seg_len - s
            if remain <= left or i == len(self.wp) - 1:
                f = (s + min(remain, left)) / seg_len if seg_len > 0 else 0.0
                f = clamp(f, 0.0, 1.0)
                return (a[0] + f * seg[0], a[1] + f * seg[1], b[2])
            remain -= left
            i += 1
            a, b = self.wp[i - 1], self.wp[i]
            seg = (b[0] - a[0], b[1] - a[1])
            seg_len = math.hypot(*seg)
            s = 0.0
