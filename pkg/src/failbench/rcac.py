"""Retrospective cost adaptive control.

Each augmented loop gets an independent SISO channel that adapts a
(K_p, K_i, K_d, K_ff) gain vector by recursive least squares on a
retrospective error: the measured error corrected by what a different past
control, replayed through the scalar model sigma, would have produced.  The
covariance recursion carries both the sigma-weighted past regressor (error
weight R_e) and the current regressor (control weight R_u), so the gain
vector tracks the exact minimizer of the accumulated retrospective cost.

Channel outputs add to the stock setpoints, scaled by the mixing weight
alpha: attitude channels shift the rate setpoints, rate channels shift the
angular-acceleration setpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a normal dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

from .controllers import Setpoints

CHANNELS = ("pitch", "pitch_rate", "roll", "roll_rate", "yaw_rate")

# nominal per-channel (P0, R_u)
CHANNEL_DEFAULTS = {
    "pitch": (1.0, 0.001),
    "pitch_rate": (1e-4, 0.1),
    "roll": (1.0, 0.001),
    "roll_rate": (1e-4, 0.1),
    "yaw_rate": (1e-4, 0.1),
}


class NumericalBreakdown(Exception):
    """Covariance lost symmetry or positive definiteness; flag the trial."""


@dataclass
class RcacHyper:
    """Adaptation hyperparameters for one channel.

    sigma models the one-step response of the channel error to the control
    input; with errors defined as setpoint minus measurement and the control
    adding to the loop's own demand, that sensitivity is negative, so the
    default is -1.  A wrong sigma sign makes the adaptation fight the loop.
    """

    p0: float = 1.0
    ru: float = 0.001
    re: float = 1.0
    sigma: float = -1.0
    rho0: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    alpha: float = 1.0

    def __post_init__(self):
        if self.p0 <= 0:
            raise ValueError("p0 must be positive")
        if self.re <= 0:
            raise ValueError("re must be positive")
        if self.ru < 0:
            raise ValueError("ru must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")


@dataclass
class RcacState:
    """Gain vector, covariance, and the short history the regressor needs."""

    rho: np.ndarray
    P: np.ndarray
    e_prev: float = 0.0
    e_prev2: float = 0.0
    nu: float = 0.0
    u_prev: float = 0.0
    gamma_prev: np.ndarray = field(default_factory=lambda: np.zeros(4))


def init_state(hyper: RcacHyper) -> RcacState:
    return RcacState(rho=np.asarray(hyper.rho0, dtype=float).copy(),
                     P=hyper.p0 * np.eye(4))


def regressor(state: RcacState, r_k: float) -> np.ndarray:
    """PID + feedforward regressor row: [e_prev, nu_prev, e_prev - e_prev2, r]."""
    return np.array([state.e_prev, state.nu, state.e_prev - state.e_prev2, r_k])


def accumulate(state: RcacState, e: float, dt: float) -> float:
    """Integrator leg of the regressor: nu += e * dt."""
    state.nu += e * dt
    return state.nu


def control(gamma_k: np.ndarray, rho: np.ndarray) -> float:
    """Control input as the regressor/gain inner product."""
    return float(gamma_k @ rho)


@njit(cache=True)
def _rank1(P, v, weight):
    """In-place Sherman-Morrison step for information gain weight * v v^T."""
    pv0 = P[0, 0] * v[0] + P[0, 1] * v[1] + P[0, 2] * v[2] + P[0, 3] * v[3]
    pv1 = P[1, 0] * v[0] + P[1, 1] * v[1] + P[1, 2] * v[2] + P[1, 3] * v[3]
    pv2 = P[2, 0] * v[0] + P[2, 1] * v[1] + P[2, 2] * v[2] + P[2, 3] * v[3]
    pv3 = P[3, 0] * v[0] + P[3, 1] * v[1] + P[3, 2] * v[2] + P[3, 3] * v[3]
    den = 1.0 / weight + v[0] * pv0 + v[1] * pv1 + v[2] * pv2 + v[3] * pv3
    pv = (pv0, pv1, pv2, pv3)
    for i in range(4):
        for j in range(4):
            P[i, j] -= pv[i] * pv[j] / den


@njit(cache=True)
def _rcac_core(P, rho, gp, gk, e_k, u_prev, sigma, re, ru):
    """One in-place covariance + gain update (see update_gains)."""
    if gp[0] != 0.0 or gp[1] != 0.0 or gp[2] != 0.0 or gp[3] != 0.0:
        _rank1(P, sigma * gp, re)
    if ru > 0.0 and (gk[0] != 0.0 or gk[1] != 0.0 or gk[2] != 0.0 or gk[3] != 0.0):
        _rank1(P, gk, ru)
    for i in range(4):
        for j in range(i + 1, 4):
            s = 0.5 * (P[i, j] + P[j, i])
            P[i, j] = s
            P[j, i] = s

    gp_rho = gp[0] * rho[0] + gp[1] * rho[1] + gp[2] * rho[2] + gp[3] * rho[3]
    gk_rho = gk[0] * rho[0] + gk[1] * rho[1] + gk[2] * rho[2] + gk[3] * rho[3]
    ehat = e_k + sigma * (gp_rho - u_prev)
    c1 = sigma * re * ehat
    c2 = ru * gk_rho
    for i in range(4):
        pg = P[i, 0] * gp[0] + P[i, 1] * gp[1] + P[i, 2] * gp[2] + P[i, 3] * gp[3]
        pk = P[i, 0] * gk[0] + P[i, 1] * gk[1] + P[i, 2] * gk[2] + P[i, 3] * gk[3]
        rho[i] -= c1 * pg + c2 * pk


def update_gains(state: RcacState, e_k: float, hyper: RcacHyper,
                 gamma_k: np.ndarray) -> RcacState:
    """One recursive gain/covariance update after observing error e_k.

    The covariance absorbs sigma * gamma_prev (weight R_e) and gamma_k
    (weight R_u) as rank-one information steps, is re-symmetrized, and the
    gain vector moves against the retrospective error
    e_k + sigma * (gamma_prev . rho - u_prev) and the control-penalty
    gradient.  Exactly zero regressors leave rho and P untouched.
    """
    _rcac_core(state.P, state.rho, state.gamma_prev, np.asarray(gamma_k, dtype=float),
               e_k, state.u_prev, hyper.sigma, hyper.re, hyper.ru)
    # cheap necessary checks; a NaN anywhere reaches the gain sum within a step
    P, rho = state.P, state.rho
    d = P[0, 0] + P[1, 1] + P[2, 2] + P[3, 3]
    s = d + rho[0] + rho[1] + rho[2] + rho[3]
    if not math.isfinite(s):
        raise NumericalBreakdown("non-finite covariance or gains")
    if P[0, 0] <= 0 or P[1, 1] <= 0 or P[2, 2] <= 0 or P[3, 3] <= 0:
        raise NumericalBreakdown("covariance diagonal lost positivity")
    return state


def augment(stock: Setpoints, u_theta: float, u_phi: float,
            u_omega: tuple[float, float, float], alpha: float) -> Setpoints:
    """Add alpha-scaled adaptive terms onto the stock setpoints."""
    ax, ay, az = stock.alpha_s
    return replace(
        stock,
        thetadot_s=stock.thetadot_s + alpha * u_theta,
        phidot_s=stock.phidot_s + alpha * u_phi,
        alpha_s=(ax + alpha * u_omega[0], ay + alpha * u_omega[1],
                 az + alpha * u_omega[2]),
    )


class RcacChannel:
    """One adaptive SISO loop: regressor, control, and gain update per tick."""

    def __init__(self, hyper: RcacHyper):
        self.hyper = hyper
        self.state = init_state(hyper)

    def step(self, e: float, r: float, dt: float) -> float:
        """Observe (error, feedforward) and return this tick's control input.

        The control uses the gain vector from the previous update; the update
        then folds in the new error so next tick's control reflects it.
        """
        st = self.state
        gamma = regressor(st, r)
        u = control(gamma, st.rho)
        update_gains(st, e, self.hyper, gamma)
        accumulate(st, e, dt)
        st.e_prev2 = st.e_prev
        st.e_prev = e
        st.u_prev = u
        st.gamma_prev = gamma
        return u


@njit(cache=True)
def _bank_core(P, rho, gp, gk, hist, hyp, e, r, dt, u_out):
    """Per-tick step for a stack of channels; hist rows are
    [e_prev, e_prev2, nu, u_prev] and hyp rows [sigma, re, ru].
    Returns 1 + channel index on covariance breakdown, 0 when healthy."""
    n = rho.shape[0]
    status = 0
    for c in range(n):
        g = gk[c]
        g[0] = hist[c, 0]
        g[1] = hist[c, 2]
        g[2] = hist[c, 0] - hist[c, 1]
        g[3] = r[c]
        u = g[0] * rho[c, 0] + g[1] * rho[c, 1] + g[2] * rho[c, 2] + g[3] * rho[c, 3]
        _rcac_core(P[c], rho[c], gp[c], g, e[c], hist[c, 3],
                   hyp[c, 0], hyp[c, 1], hyp[c, 2])
        hist[c, 2] += e[c] * dt
        hist[c, 1] = hist[c, 0]
        hist[c, 0] = e[c]
        hist[c, 3] = u
        u_out[c] = u
        for j in range(4):
            gp[c, j] = g[j]
        health = P[c, 0, 0] + P[c, 1, 1] + P[c, 2, 2] + P[c, 3, 3]
        if not (P[c, 0, 0] > 0.0 and P[c, 1, 1] > 0.0 and P[c, 2, 2] > 0.0
                and P[c, 3, 3] > 0.0) or not math.isfinite(health + u):
            status = 1 + c
    return status


class RcacBank:
    """Several channels stepped together in one compiled call.

    Semantically identical to stepping each RcacChannel in order; the
    stacked-state layout just amortizes the per-call overhead inside the
    250 Hz loop.  Breakdown checks mirror update_gains.
    """

    def __init__(self, hypers: list[RcacHyper]):
        n = len(hypers)
        self.hypers = list(hypers)
        self.P = np.stack([h.p0 * np.eye(4) for h in hypers])
        self.rho = np.stack([np.asarray(h.rho0, dtype=float) for h in hypers])
        self.gamma_prev = np.zeros((n, 4))
        self._gamma = np.zeros((n, 4))
        self.hist = np.zeros((n, 4))    # e_prev, e_prev2, nu, u_prev
        self.hyp = np.array([[h.sigma, h.re, h.ru] for h in hypers])
        self._e = np.zeros(n)
        self._r = np.zeros(n)
        self._u = np.zeros(n)

    def step_all(self, errors, feedforwards, dt: float) -> np.ndarray:
        self._e[:] = errors
        self._r[:] = feedforwards
        status = _bank_core(self.P, self.rho, self.gamma_prev, self._gamma,
                            self.hist, self.hyp, self._e, self._r, dt, self._u)
        if status:
            raise NumericalBreakdown(f"channel {status - 1} covariance broke down")
        return self._u


def default_channels(alpha: float = 1.0, sigma: float = -1.0,
                     re: float = 1.0) -> dict[str, RcacChannel]:
    """The five nominal channels with their per-channel (P0, R_u) settings."""
    out = {}
    for name in CHANNELS:
        p0, ru = CHANNEL_DEFAULTS[name]
        out[name] = RcacChannel(RcacHyper(p0=p0, ru=ru, re=re, sigma=sigma,
                                          alpha=alpha))
    return out
