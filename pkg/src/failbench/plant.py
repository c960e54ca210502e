"""Simplified fixed-wing 6-DOF plant: rigid body with a linear aero model.

Conventions: NED position, body-frame velocity (u fwd / v right / w down),
Euler roll-pitch-yaw attitude, body rates p/q/r.  Surface deflections are
dimensionless in [-1, 1] (throttle in [0, 1]); each surface has a direct
moment derivative, so the ailerons carry opposite-sign roll derivatives plus
small same-magnitude adverse-yaw terms, which makes a single stuck aileron
observable in both axes.  Lift/drag/side force are resolved exactly through
the wind axes so drag opposes the velocity vector and lift does no work.
No atmosphere model: indicated airspeed equals true airspeed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a normal dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

_HALF_PI = math.pi / 2.0


class PlantError(Exception):
    pass


class NonFinite(PlantError):
    """A state derivative or integrated state stopped being finite."""


class CrashDetected(PlantError):
    """Attitude invariant violated or ground contact; the trial is over."""


class NoTrimFound(PlantError):
    """Trim solver failed to converge to a level-flight fixed point."""


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


@dataclass
class ActuatorVector:
    """Commanded/actual deflections: ailerons, elevator, rudder in [-1,1], throttle in [0,1]."""

    ail_l: float = 0.0
    ail_r: float = 0.0
    ele: float = 0.0
    thr: float = 0.0
    rud: float = 0.0

    def clamped(self) -> "ActuatorVector":
        return ActuatorVector(
            ail_l=clamp(self.ail_l, -1.0, 1.0),
            ail_r=clamp(self.ail_r, -1.0, 1.0),
            ele=clamp(self.ele, -1.0, 1.0),
            thr=clamp(self.thr, 0.0, 1.0),
            rud=clamp(self.rud, -1.0, 1.0),
        )

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.ail_l, self.ail_r, self.ele, self.thr, self.rud)


@dataclass
class AircraftState:
    """6-DOF rigid-body state plus airspeed.

    pos is NED meters, vel is body-frame m/s, att is (roll, pitch, yaw)
    radians, rates is body angular velocity rad/s.
    """

    t: float = 0.0
    pos: tuple[float, float, float] = (0.0, 0.0, 0.0)
    vel: tuple[float, float, float] = (0.0, 0.0, 0.0)
    att: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rates: tuple[float, float, float] = (0.0, 0.0, 0.0)
    v_tas: float = 0.0
    v_ias: float = 0.0

    @property
    def altitude(self) -> float:
        return -self.pos[2]

    @property
    def phi(self) -> float:
        return self.att[0]

    @property
    def theta(self) -> float:
        return self.att[1]

    @property
    def psi(self) -> float:
        return self.att[2]


@dataclass
class PlantConfig:
    """Mass/inertia, per-surface control derivatives, and the linear aero model.

    Moment derivatives are N*m per unit deflection (or per rad for the
    stability terms) at the trim dynamic pressure; stiffness and control
    terms scale with (V/V_trim)^2, damping with (V/V_trim).
    """

    mass: float = 3.0               # kg
    inertia: tuple[float, float, float] = (0.5, 0.45, 0.8)  # Jx, Jy, Jz kg m^2

    # control derivatives, N m per unit deflection
    l_ail: float = 2.5              # one aileron's roll moment (left +, right -)
    n_ail: float = 0.25             # adverse yaw per unit aileron
    m_ele: float = 2.5              # elevator pitch moment
    n_rud: float = 1.5              # rudder yaw moment
    l_rud: float = 0.15             # rudder roll coupling

    # stability derivatives
    l_beta: float = -0.6            # dihedral, N m / rad sideslip
    l_p: float = -1.2               # roll damping, N m s / rad
    m_0: float = 0.2                # zero-alpha pitch moment, N m
    m_alpha: float = -4.0           # pitch stiffness, N m / rad
    m_q: float = -1.0               # pitch damping, N m s / rad
    n_beta: float = 2.0             # weathercock, N m / rad
    n_r: float = -0.8               # yaw damping, N m s / rad

    # force model
    wing_area: float = 0.45         # m^2
    rho: float = 1.225              # kg / m^3
    cl0: float = 0.25
    cl_alpha: float = 4.5           # lift slope, 1 / rad
    cd0: float = 0.04
    k_induced: float = 0.06         # CD = cd0 + k CL^2
    cy_beta: float = -0.8           # side force, 1 / rad
    thrust_max: float = 12.0        # N
    stall_alpha: float = 0.3        # rad; trim beyond this is rejected

    g: float = 9.80665              # m / s^2
    dt_dynamics: float = 0.004      # s (250 Hz)
    v_trim_tas: float = 15.0        # m / s
    v_trim_ias: float = 15.0        # m / s

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if any(j <= 0 for j in self.inertia):
            raise ValueError("inertia entries must be positive")
        if self.dt_dynamics <= 0:
            raise ValueError("dt_dynamics must be positive")
        self._params = np.array([
            self.mass, *self.inertia,
            self.l_ail, self.n_ail, self.m_ele, self.n_rud, self.l_rud,
            self.l_beta, self.l_p, self.m_0, self.m_alpha, self.m_q,
            self.n_beta, self.n_r,
            0.5 * self.rho * self.wing_area, self.cl0, self.cl_alpha,
            self.cd0, self.k_induced, self.cy_beta,
            self.thrust_max, self.g, self.v_trim_tas,
        ])


@njit(cache=True)
def _deriv_core(y, act, prm, out):
    """Derivative of (pn, pe, pd, u, v, w, phi, theta, psi, p, q, r).

    `prm` is PlantConfig._params; compiled by numba when available, plain
    Python otherwise.  Treat this as the single source of truth for the
    equations of motion.
    """
    u, v, w = y[3], y[4], y[5]
    phi, theta, psi = y[6], y[7], y[8]
    p, q, r = y[9], y[10], y[11]
    ail_l, ail_r, ele, thr, rud = act[0], act[1], act[2], act[3], act[4]

    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    spsi, cpsi = math.sin(psi), math.cos(psi)

    vsq = u * u + v * v + w * w
    vtot = math.sqrt(vsq)
    if vtot > 1e-9:
        alpha = math.atan2(w, u)
        sinb = v / vtot
        if sinb > 1.0:
            sinb = 1.0
        elif sinb < -1.0:
            sinb = -1.0
        beta = math.asin(sinb)
    else:
        alpha = 0.0
        beta = 0.0
    sa, ca = math.sin(alpha), math.cos(alpha)
    sb, cb = math.sin(beta), math.cos(beta)

    qbar_s = prm[16] * vsq
    cl = prm[17] + prm[18] * alpha
    cd = prm[19] + prm[20] * cl * cl
    lift = qbar_s * cl
    drag = qbar_s * cd
    side = qbar_s * prm[21] * beta

    # wind axes resolved in body frame: x_w along velocity, z_w in symmetry plane
    fx = -drag * (ca * cb) + side * (-ca * sb) + lift * sa
    fy = -drag * sb + side * cb
    fz = -drag * (sa * cb) + side * (-sa * sb) - lift * ca

    m = prm[0]
    gw = m * prm[23]
    fx += prm[22] * thr - gw * sth
    fy += gw * sphi * cth
    fz += gw * cphi * cth

    # dynamic-pressure scaling around trim: stiffness/control ~ V^2, damping ~ V
    v_trim = prm[24]
    qr2 = vsq / (v_trim * v_trim)
    qr1 = vtot / v_trim
    mom_x = qr2 * (prm[9] * beta + prm[4] * (ail_l - ail_r) + prm[8] * rud) \
        + qr1 * prm[10] * p
    mom_y = qr2 * (prm[11] + prm[12] * alpha + prm[6] * ele) + qr1 * prm[13] * q
    mom_z = qr2 * (prm[14] * beta + prm[5] * (ail_r - ail_l) + prm[7] * rud) \
        + qr1 * prm[15] * r

    jx, jy, jz = prm[1], prm[2], prm[3]
    out[0] = (cth * cpsi) * u + (sphi * sth * cpsi - cphi * spsi) * v \
        + (cphi * sth * cpsi + sphi * spsi) * w
    out[1] = (cth * spsi) * u + (sphi * sth * spsi + cphi * cpsi) * v \
        + (cphi * sth * spsi - sphi * cpsi) * w
    out[2] = -sth * u + sphi * cth * v + cphi * cth * w
    out[3] = r * v - q * w + fx / m
    out[4] = p * w - r * u + fy / m
    out[5] = q * u - p * v + fz / m
    tth = sth / cth
    out[6] = p + (q * sphi + r * cphi) * tth
    out[7] = q * cphi - r * sphi
    out[8] = (q * sphi + r * cphi) / cth
    out[9] = (mom_x - (jz - jy) * q * r) / jx
    out[10] = (mom_y - (jx - jz) * p * r) / jy
    out[11] = (mom_z - (jy - jx) * p * q) / jz


@njit(cache=True)
def _rk4_core(y, act, prm, dt, out):
    k1 = np.empty(12)
    k2 = np.empty(12)
    k3 = np.empty(12)
    k4 = np.empty(12)
    tmp = np.empty(12)
    _deriv_core(y, act, prm, k1)
    for i in range(12):
        tmp[i] = y[i] + 0.5 * dt * k1[i]
    _deriv_core(tmp, act, prm, k2)
    for i in range(12):
        tmp[i] = y[i] + 0.5 * dt * k2[i]
    _deriv_core(tmp, act, prm, k3)
    for i in range(12):
        tmp[i] = y[i] + dt * k3[i]
    _deriv_core(tmp, act, prm, k4)
    h6 = dt / 6.0
    for i in range(12):
        out[i] = y[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])


def _derivatives(cfg: PlantConfig, y: tuple, act: ActuatorVector) -> tuple:
    """Python-facing wrapper over the derivative kernel (used by the trim
    solver and tests)."""
    out = np.empty(12)
    _deriv_core(np.asarray(y, dtype=float), np.asarray(act.as_tuple()),
                cfg._params, out)
    return tuple(out.tolist())


def _wrap_pi(x: float) -> float:
    if -math.pi <= x <= math.pi:
        return x
    return math.atan2(math.sin(x), math.cos(x))


def step_dynamics(state: AircraftState, act: ActuatorVector, cfg: PlantConfig,
                  dt: float) -> AircraftState:
    """Advance the rigid body by one fixed RK4 step.

    Raises NonFinite if the integration produced a non-finite state and
    CrashDetected when |pitch| reaches 90 deg or the aircraft hits the
    ground; roll and yaw are wrapped to (-pi, pi] after the step.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0.0:
        return state
    act = act.clamped()

    y0 = np.array(state.pos + state.vel + state.att + state.rates)
    a = np.array(act.as_tuple())
    out = np.empty(12)
    _rk4_core(y0, a, cfg._params, dt, out)
    y = out.tolist()

    if not all(math.isfinite(x) for x in y):
        raise NonFinite(f"non-finite state after step from t={state.t}")

    pn, pe, pd, u, v, w, phi, theta, psi, p, q, r = y
    if abs(theta) >= _HALF_PI:
        raise CrashDetected(f"pitch {theta:.3f} rad at t={state.t + dt:.3f}")
    if pd >= 0.0:
        raise CrashDetected(f"ground contact at t={state.t + dt:.3f}")
    phi = _wrap_pi(phi)
    psi = _wrap_pi(psi)

    v_tas = math.sqrt(u * u + v * v + w * w)
    return AircraftState(
        t=state.t + dt,
        pos=(pn, pe, pd),
        vel=(u, v, w),
        att=(phi, theta, psi),
        rates=(p, q, r),
        v_tas=v_tas,
        v_ias=v_tas,
    )


def _trim_state(cfg: PlantConfig, v: float, altitude: float, theta: float) -> AircraftState:
    # level flight: flight-path angle 0, so angle of attack equals pitch
    return AircraftState(
        t=0.0,
        pos=(0.0, 0.0, -altitude),
        vel=(v * math.cos(theta), 0.0, v * math.sin(theta)),
        att=(0.0, theta, 0.0),
        rates=(0.0, 0.0, 0.0),
        v_tas=v,
        v_ias=v,
    )


def _trim_residual(cfg: PlantConfig, v: float, altitude: float, x: tuple) -> tuple:
    theta, ele, thr = x
    st = _trim_state(cfg, v, altitude, theta)
    act = ActuatorVector(ele=ele, thr=thr)
    d = _derivatives(cfg, st.pos + st.vel + st.att + st.rates, act)
    return (d[3], d[5], d[10])  # u_dot, w_dot, q_dot


def compute_trim(cfg: PlantConfig, target_speed: float,
                 altitude: float) -> tuple[AircraftState, ActuatorVector]:
    """Find the straight-and-level fixed point at the given airspeed.

    Damped Newton iteration on (pitch, elevator, throttle); raises
    NoTrimFound if it fails to converge in 500 iterations, needs more than
    the available throttle or surface authority, or trims beyond the
    configured stall angle of attack.
    """
    if target_speed <= 0:
        raise NoTrimFound(f"no level-flight fixed point at {target_speed} m/s")

    x = [0.02, 0.0, 0.3]
    res = _trim_residual(cfg, target_speed, altitude, tuple(x))
    norm = max(abs(v) for v in res)
    eps = 1e-7
    for _ in range(500):
        if norm < 1e-8:
            break
        jac = [[0.0] * 3 for _ in range(3)]
        for j in range(3):
            xp = list(x)
            xp[j] += eps
            rp = _trim_residual(cfg, target_speed, altitude, tuple(xp))
            for i in range(3):
                jac[i][j] = (rp[i] - res[i]) / eps
        try:
            dx = _solve3(jac, [-r for r in res])
        except ZeroDivisionError:
            raise NoTrimFound("singular trim Jacobian") from None
        # backtracking line search
        lam = 1.0
        for _ in range(25):
            xn = tuple(a + lam * b for a, b in zip(x, dx))
            rn = _trim_residual(cfg, target_speed, altitude, xn)
            nn = max(abs(v) for v in rn)
            if math.isfinite(nn) and nn < norm:
                x, res, norm = list(xn), rn, nn
                break
            lam *= 0.5
        else:
            raise NoTrimFound(f"trim line search stalled, residual {norm:.3e}")
    else:
        raise NoTrimFound(f"no convergence after 500 iterations, residual {norm:.3e}")

    theta, ele, thr = x
    if not (0.0 <= thr <= 1.0) or not (-1.0 <= ele <= 1.0):
        raise NoTrimFound(f"trim outside actuator authority: ele={ele:.3f}, thr={thr:.3f}")
    if abs(theta) > cfg.stall_alpha:
        raise NoTrimFound(f"trim angle of attack {theta:.3f} rad beyond stall threshold")

    st = _trim_state(cfg, target_speed, altitude, theta)
    act = ActuatorVector(ele=ele, thr=thr)
    d = _derivatives(cfg, st.pos + st.vel + st.att + st.rates, act)
    accel = [abs(v) for v in (d[3], d[4], d[5], d[9], d[10], d[11])]
    if max(accel) > 1e-6:
        raise NoTrimFound(f"residual acceleration {max(accel):.3e} above 1e-6")
    return st, act


def _solve3(a: list[list[float]], b: list[float]) -> tuple:
    """3x3 linear solve by Gaussian elimination with partial pivoting."""
    m = [row[:] + [bi] for row, bi in zip(a, b)]
    for col in range(3):
        piv = max(range(col, 3), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) < 1e-300:
            raise ZeroDivisionError
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, 3):
            f = m[r][col] / m[col][col]
            for c in range(col, 4):
                m[r][c] -= f * m[col][c]
    x = [0.0, 0.0, 0.0]
    for i in (2, 1, 0):
        x[i] = (m[i][3] - sum(m[i][j] * x[j] for j in range(i + 1, 3))) / m[i][i]
    return tuple(x)


def mix(alpha_sp: tuple[float, float, float], thrust_sp: float,
        cfg: PlantConfig) -> ActuatorVector:
    """Static control allocation from angular-acceleration demand to deflections.

    Roll demand splits with opposite sign onto the two ailerons, pitch onto
    the elevator, yaw onto the rudder; thrust passes straight through.
    Outputs are clamped to their ranges (saturation is the contract).
    """
    jx, jy, jz = cfg.inertia
    ail = jx * alpha_sp[0] / (2.0 * cfg.l_ail)
    ele = jy * alpha_sp[1] / cfg.m_ele
    rud = jz * alpha_sp[2] / cfg.n_rud
    return ActuatorVector(ail_l=ail, ail_r=-ail, ele=ele, thr=thrust_sp,
                          rud=rud).clamped()


def mechanical_energy(state: AircraftState, cfg: PlantConfig) -> float:
    """Kinetic (translational + rotational) plus gravitational potential energy."""
    u, v, w = state.vel
    p, q, r = state.rates
    jx, jy, jz = cfg.inertia
    ke = 0.5 * cfg.mass * (u * u + v * v + w * w) \
        + 0.5 * (jx * p * p + jy * q * q + jz * r * r)
    return ke + cfg.mass * cfg.g * state.altitude
