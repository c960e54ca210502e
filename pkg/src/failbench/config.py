"""Plain-text hierarchical key-value configuration.

Files hold one `dotted.key = value` assignment per line; `#` starts a
comment.  Values parse as bool/int/float/string, comma-separated lists, or
`a:b` pairs (used by failure.switch_schedule).  Unknown keys are rejected so
typos fail loudly.  `dump_config` renders the merged configuration in sorted
order and `config_hash` fingerprints it for the run summaries.
"""

from __future__ import annotations

import hashlib
import math

from .controllers import AttitudeGains, PositionGains
from .plant import PlantConfig
from .rcac import CHANNELS, CHANNEL_DEFAULTS

DEFAULTS: dict = {
    # plant
    "plant.mass": 3.0,
    "plant.jx": 0.5,
    "plant.jy": 0.45,
    "plant.jz": 0.8,
    "plant.l_ail": 2.5,
    "plant.n_ail": 0.25,
    "plant.m_ele": 2.5,
    "plant.n_rud": 1.5,
    "plant.l_rud": 0.15,
    "plant.l_beta": -0.6,
    "plant.l_p": -1.2,
    "plant.m_0": 0.2,
    "plant.m_alpha": -4.0,
    "plant.m_q": -1.0,
    "plant.n_beta": 2.0,
    "plant.n_r": -0.8,
    "plant.wing_area": 0.45,
    "plant.rho": 1.225,
    "plant.cl0": 0.25,
    "plant.cl_alpha": 4.5,
    "plant.cd0": 0.04,
    "plant.k_induced": 0.06,
    "plant.cy_beta": -0.8,
    "plant.thrust_max": 12.0,
    "plant.stall_alpha": 0.3,
    "plant.v_trim": 15.0,

    # the 11 tuned attitude-loop variables
    "pid.k_theta": 3.0,
    "pid.k_phi": 3.5,
    "pid.k_ff_roll": 0.4,
    "pid.k_ff_pitch": 0.4,
    "pid.k_ff_yaw": 0.4,
    "pid.k_p_roll": 8.0,
    "pid.k_p_pitch": 8.0,
    "pid.k_p_yaw": 6.0,
    "pid.k_i_roll": 4.0,
    "pid.k_i_pitch": 4.0,
    "pid.k_i_yaw": 2.0,
    "pid.integrator_limit": 0.4,
    "pid.bank_limit_deg": 50.0,
    "pid.v_min": 3.0,

    # outer loop
    "position.kp_alt": 0.035,
    "position.ki_alt": 0.006,
    "position.theta_max_deg": 25.0,
    "position.kp_speed": 0.08,
    "position.ki_speed": 0.02,
    "position.lookahead": 45.0,

    # adaptive augmentation
    "rcac.alpha": 1.0,
    **{f"rcac.{ch}.p0": CHANNEL_DEFAULTS[ch][0] for ch in CHANNELS},
    **{f"rcac.{ch}.ru": CHANNEL_DEFAULTS[ch][1] for ch in CHANNELS},
    **{f"rcac.{ch}.re": 1.0 for ch in CHANNELS},
    **{f"rcac.{ch}.sigma": -1.0 for ch in CHANNELS},

    # failure chain
    "failure.p_loop": 0.3,
    "failure.p_ground": 0.4,
    "failure.mode": "hold_last",
    "failure.switch_schedule": [(20.0, math.inf)],

    # mission
    "mission.orders": [1, 2, 3, 4],
    "mission.quadrant_size": 400.0,
    "mission.altitude": 100.0,
    "mission.speed": 15.0,
    "mission.acceptance_radius": 10.0,

    # harness
    "harness.dynamics_rate": 250,
    "harness.attitude_rate": 250,
    "harness.position_rate": 50,
    "harness.failure_rate": 1,
    "harness.log_rate": 2,
    "harness.max_sim_time": 0.0,      # 0 = sized from the plan
    "harness.init_jitter_pos": 5.0,   # m, 1-sigma per axis
    "harness.init_jitter_heading": 0.05,  # rad, 1-sigma
    "harness.controllers": ["pid", "rcac@0.5", "rcac@1.0"],
    "harness.trials": 8,
    "harness.seed_base": 1000,
}


def _parse_scalar(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("inf", "+inf"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_value(text: str):
    """Scalar, `a:b` pair, or comma-separated list of either."""
    text = text.strip()
    if text == "" or text == "[]":
        return []
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    if ":" in text:
        parts = text.split(":")
        if len(parts) == 2:
            return (_parse_scalar(parts[0].strip()), _parse_scalar(parts[1].strip()))
    return _parse_scalar(text)


def _normalize(key: str, val):
    # single-element lists parse as bare scalars; restore the list shape
    if key == "failure.switch_schedule" and isinstance(val, tuple):
        return [val]
    if key == "mission.orders" and isinstance(val, int):
        return [val]
    if key == "harness.controllers" and isinstance(val, str):
        return [val]
    return val


def load_config(path: str | None = None, overrides: dict | None = None) -> dict:
    """Defaults overlaid with a config file and then explicit overrides."""
    cfg = dict(DEFAULTS)
    if path is not None:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in cfg:
                    raise KeyError(f"{path}:{lineno}: unknown config key {key!r}")
                cfg[key] = _normalize(key, parse_value(val))
    if overrides:
        for key, val in overrides.items():
            if key not in cfg:
                raise KeyError(f"unknown config key {key!r}")
            cfg[key] = _normalize(key, val)
    return cfg


def _fmt(v) -> str:
    if isinstance(v, list):
        return ", ".join(_fmt(x) for x in v) if v else "[]"
    if isinstance(v, tuple):
        return ":".join(_fmt(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: dict) -> str:
    return "".join(f"{k} = {_fmt(cfg[k])}\n" for k in sorted(cfg))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()[:16]


def plant_config(cfg: dict, dt: float) -> PlantConfig:
    return PlantConfig(
        mass=cfg["plant.mass"],
        inertia=(cfg["plant.jx"], cfg["plant.jy"], cfg["plant.jz"]),
        l_ail=cfg["plant.l_ail"],
        n_ail=cfg["plant.n_ail"],
        m_ele=cfg["plant.m_ele"],
        n_rud=cfg["plant.n_rud"],
        l_rud=cfg["plant.l_rud"],
        l_beta=cfg["plant.l_beta"],
        l_p=cfg["plant.l_p"],
        m_0=cfg["plant.m_0"],
        m_alpha=cfg["plant.m_alpha"],
        m_q=cfg["plant.m_q"],
        n_beta=cfg["plant.n_beta"],
        n_r=cfg["plant.n_r"],
        wing_area=cfg["plant.wing_area"],
        rho=cfg["plant.rho"],
        cl0=cfg["plant.cl0"],
        cl_alpha=cfg["plant.cl_alpha"],
        cd0=cfg["plant.cd0"],
        k_induced=cfg["plant.k_induced"],
        cy_beta=cfg["plant.cy_beta"],
        thrust_max=cfg["plant.thrust_max"],
        stall_alpha=cfg["plant.stall_alpha"],
        dt_dynamics=dt,
        v_trim_tas=cfg["plant.v_trim"],
        v_trim_ias=cfg["plant.v_trim"],
    )


def attitude_gains(cfg: dict) -> AttitudeGains:
    return AttitudeGains(
        k_theta=cfg["pid.k_theta"],
        k_phi=cfg["pid.k_phi"],
        k_ff=(cfg["pid.k_ff_roll"], cfg["pid.k_ff_pitch"], cfg["pid.k_ff_yaw"]),
        k_p=(cfg["pid.k_p_roll"], cfg["pid.k_p_pitch"], cfg["pid.k_p_yaw"]),
        k_i=(cfg["pid.k_i_roll"], cfg["pid.k_i_pitch"], cfg["pid.k_i_yaw"]),
        integrator_limit=cfg["pid.integrator_limit"],
        bank_limit=math.radians(cfg["pid.bank_limit_deg"]),
        v_min=cfg["pid.v_min"],
    )


def position_gains(cfg: dict) -> PositionGains:
    return PositionGains(
        kp_alt=cfg["position.kp_alt"],
        ki_alt=cfg["position.ki_alt"],
        theta_max=math.radians(cfg["position.theta_max_deg"]),
        kp_speed=cfg["position.kp_speed"],
        ki_speed=cfg["position.ki_speed"],
        lookahead=cfg["position.lookahead"],
    )
