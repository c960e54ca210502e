"""Trial orchestration: wire plant, controllers, failure chain, and mission
into seeded trials and score them.

A trial is a fixed-step co-simulation on integer tick counters (position
loop, attitude cascade, failure chain, and log all divide the dynamics
rate), so loop phasing never drifts and a (config, seed) pair reproduces
every output byte.  The per-trial PCG64 generator first draws the initial
position/heading jitter, then the full failure-state schedule over the trial
horizon; pre-generating the schedule keeps failure sequences identical
across controller configurations that share a seed, even when one of them
crashes early.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import failure as fl
from .config import attitude_gains, config_hash, plant_config, position_gains
from .controllers import (AirspeedTooLow, PlanTracker, Setpoints,
                          angular_accel_setpoint, coordinated_turn_yaw_rate,
                          euler_rates_to_body, position_controller,
                          rate_setpoints)
from .evaluate import (Source, Trajectory, dtw_distance, from_waypoints,
                       resample)
from .mission import FlightPlan, build_flight_plan, plan_length
from .plant import (AircraftState, CrashDetected, NonFinite, compute_trim,
                    mix, step_dynamics)
from .rcac import NumericalBreakdown, RcacBank, RcacHyper, augment

# HITL reference statistics for the same protocol, in meters (mean, std).
# Desk-scale magnitudes do not transfer; these are reported for side-by-side
# comparison of orderings only.
REFERENCE_DTW = {
    "pid": {"clean": (461.0, 39.0), "adverse": (595.0, 154.0),
            "self_similarity": (133.0, 47.0)},
    "rcac_a0.5": {"clean": (604.0, 45.0), "adverse": (1196.0, 302.0),
                  "self_similarity": (172.0, 46.0)},
    "rcac_a1": {"clean": (457.0, 19.0), "adverse": (610.0, 163.0),
                "self_similarity": (136.0, 35.0)},
}

LOG_COLUMNS = ("t", "north", "east", "alt", "phi", "theta", "psi",
               "p", "q", "r", "ail_l", "ail_r", "ele", "thr", "rud",
               "failure_state_id")


def controller_label(kind: str, alpha: float) -> str:
    return "pid" if kind == "pid" else f"rcac_a{alpha:g}"


def parse_controller(spec: str) -> tuple[str, float | None]:
    """'pid', 'rcac' (alpha from config), or 'rcac@<alpha>' into (kind, alpha)."""
    if spec == "pid":
        return "pid", 0.0
    if spec == "rcac":
        return "rcac", None
    if spec.startswith("rcac@"):
        alpha = float(spec.split("@", 1)[1])
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha out of range in {spec!r}")
        return "rcac", alpha
    raise ValueError(f"unknown controller spec {spec!r}")


@dataclass
class TrialConfig:
    """Everything one trial needs, resolved from the merged key-value config."""

    controller: str             # "pid" | "rcac"
    alpha: float
    seed: int
    adverse: bool
    cfg: dict

    def __post_init__(self):
        dyn = self.cfg["harness.dynamics_rate"]
        for key in ("harness.attitude_rate", "harness.position_rate",
                    "harness.failure_rate", "harness.log_rate"):
            rate = self.cfg[key]
            if rate <= 0 or dyn % rate != 0:
                raise ValueError(f"{key}={rate} must integer-divide "
                                 f"dynamics_rate={dyn}")
        if self.controller not in ("pid", "rcac"):
            raise ValueError(f"unknown controller {self.controller!r}")

    @property
    def label(self) -> str:
        return controller_label(self.controller, self.alpha)

    @property
    def regime(self) -> str:
        return "adverse" if self.adverse else "clean"


@dataclass
class TrialRecord:
    label: str
    regime: str
    seed: int
    crashed: bool
    flag: str                   # "", "crash", "numerical"
    completed: bool
    sim_time: float
    flown: Trajectory | None
    failure_log: list[tuple[float, int]]
    dtw_to_plan: float | None
    dtw_normalized: float | None
    log_rows: list[tuple]


@dataclass
class GroupStats:
    label: str
    regime: str
    n_trials: int
    n_crashed: int
    mean: float
    std: float
    mean_normalized: float
    q: tuple[float, float, float, float, float]   # min, q1, median, q3, max
    degenerate: bool            # fewer than 2 scored trials; std is 0 by convention


@dataclass
class EnsembleSummary:
    groups: dict[tuple[str, str], GroupStats]
    records: list[TrialRecord]
    self_similarity: dict[str, tuple[float, float]]


def _switch_on(t: float, schedule) -> bool:
    return any(t_on <= t < t_off for t_on, t_off in schedule)


def generate_failure_schedule(model: fl.TransitionModel, rng, n_ticks: int,
                              period: float, schedule) -> list[fl.FailureState]:
    """The chain's state at each 1 Hz tick over the whole horizon.

    Sampling happens only while the switch is on, and the gate forces the
    ground state (not a resumed chain) whenever it is off.
    """
    ground = model.states[0]
    out = [ground]
    for k in range(1, n_ticks):
        on = _switch_on(k * period, schedule)
        proposed = fl.step_chain(model, out[-1], rng) if on else ground
        out.append(fl.gate(on, proposed, ground))
    return out


def build_plan(cfg: dict) -> FlightPlan:
    return build_flight_plan(
        orders=tuple(cfg["mission.orders"]),
        quadrant_size=cfg["mission.quadrant_size"],
        altitude=cfg["mission.altitude"],
        speed=cfg["mission.speed"],
        acceptance_radius=cfg["mission.acceptance_radius"],
    )


def _hyper(cfg: dict, ch: str, alpha: float) -> RcacHyper:
    return RcacHyper(p0=cfg[f"rcac.{ch}.p0"], ru=cfg[f"rcac.{ch}.ru"],
                     re=cfg[f"rcac.{ch}.re"], sigma=cfg[f"rcac.{ch}.sigma"],
                     alpha=alpha)


def _rcac_banks(cfg: dict, alpha: float) -> tuple[RcacBank, RcacBank]:
    """Attitude bank (pitch, roll) and rate bank (roll/pitch/yaw rate)."""
    att = RcacBank([_hyper(cfg, "pitch", alpha), _hyper(cfg, "roll", alpha)])
    rate = RcacBank([_hyper(cfg, "roll_rate", alpha),
                     _hyper(cfg, "pitch_rate", alpha),
                     _hyper(cfg, "yaw_rate", alpha)])
    return att, rate


def run_trial(tc: TrialConfig) -> TrialRecord:
    """One seeded co-simulation; crashes and numerical breakdowns come back
    as flagged records, never exceptions."""
    cfg = tc.cfg
    dyn_rate = cfg["harness.dynamics_rate"]
    dt = 1.0 / dyn_rate
    att_div = dyn_rate // cfg["harness.attitude_rate"]
    pos_div = dyn_rate // cfg["harness.position_rate"]
    fail_div = dyn_rate // cfg["harness.failure_rate"]
    log_div = dyn_rate // cfg["harness.log_rate"]
    fail_period = 1.0 / cfg["harness.failure_rate"]

    plan = build_plan(cfg)
    pcfg = plant_config(cfg, dt)
    speed = cfg["mission.speed"]
    altitude = cfg["mission.altitude"]

    max_sim_time = cfg["harness.max_sim_time"]
    if max_sim_time <= 0:
        max_sim_time = 1.5 * plan_length(plan) / speed + 60.0
    max_ticks = int(round(max_sim_time * dyn_rate))

    rng = np.random.Generator(np.random.PCG64(tc.seed))
    jit_n, jit_e = rng.normal(0.0, cfg["harness.init_jitter_pos"], 2)
    jit_psi = rng.normal(0.0, cfg["harness.init_jitter_heading"])

    schedule = cfg["failure.switch_schedule"] if tc.adverse else []
    if schedule and isinstance(schedule, tuple):
        schedule = [schedule]
    model = fl.build_transition_model(cfg["failure.p_loop"], cfg["failure.p_ground"])
    n_chain = max_ticks // fail_div + 1
    chain = generate_failure_schedule(model, rng, n_chain, fail_period, schedule)
    failure_log = [(k * fail_period, s.id) for k, s in enumerate(chain)]

    trim_state, trim_act = compute_trim(pcfg, speed, altitude)
    wp = list(plan.waypoints)
    psi0 = math.atan2(wp[1][1] - wp[0][1], wp[1][0] - wp[0][0]) + jit_psi
    state = AircraftState(
        t=0.0,
        pos=(wp[0][0] + jit_n, wp[0][1] + jit_e, -altitude),
        vel=trim_state.vel,
        att=(0.0, trim_state.theta, psi0),
        rates=(0.0, 0.0, 0.0),
        v_tas=trim_state.v_tas,
        v_ias=trim_state.v_ias,
    )

    gains = attitude_gains(cfg)
    # pre-load the pitch-rate integrator with the trim elevator demand
    gains.reset((0.0, trim_act.ele * pcfg.m_ele / pcfg.inertia[1], 0.0))
    posg = position_gains(cfg)
    posg.trim_pitch = trim_state.theta
    posg.trim_throttle = trim_act.thr

    tracker = PlanTracker(wp, plan.acceptance_radius, posg.lookahead)
    banks = _rcac_banks(cfg, tc.alpha) if tc.controller == "rcac" else None
    injector = fl.Injector(mode=cfg["failure.mode"])
    injector.prime(trim_act)

    g = pcfg.g
    v_min = gains.v_min
    dt_att = att_div * dt
    dt_pos = pos_div * dt
    T_s, theta_s, phi_s = trim_act.thr, trim_state.theta, 0.0
    act_cmd = trim_act
    log_rows: list[tuple] = []
    crashed = False
    flag = ""
    t = 0.0

    try:
        for k in range(max_ticks):
            t = k * dt
            if k % fail_div == 0:
                injector.set_state(chain[k // fail_div])
            if k % pos_div == 0:
                seg = tracker.segment(state)
                if tracker.done:
                    break
                T_s, theta_s, phi_s = position_controller(
                    seg, state, posg, speed, g, dt_pos, gains.bank_limit)
            if k % att_div == 0:
                sp = Setpoints(T_s=T_s, theta_s=theta_s, phi_s=phi_s)
                sp.thetadot_s, sp.phidot_s = rate_setpoints(
                    theta_s, phi_s, state.theta, state.phi, gains)
                if banks is not None:
                    us = banks[0].step_all(
                        (theta_s - state.theta, phi_s - state.phi),
                        (theta_s, phi_s), dt_att)
                    sp = augment(sp, float(us[0]), float(us[1]),
                                 (0.0, 0.0, 0.0), tc.alpha)
                try:
                    sp.psidot_s = coordinated_turn_yaw_rate(
                        phi_s, theta_s, state.v_tas, g, v_min)
                except AirspeedTooLow:
                    sp.psidot_s = 0.0
                sp.omega_s = euler_rates_to_body(
                    state.phi, state.theta,
                    (sp.phidot_s, sp.thetadot_s, sp.psidot_s))
                v_eff = max(state.v_tas, v_min)
                sp.alpha_s = angular_accel_setpoint(
                    sp.omega_s, state.rates, v_eff, v_eff,
                    pcfg.v_trim_tas, pcfg.v_trim_ias, gains, dt_att)
                if banks is not None:
                    om_s, om_m = sp.omega_s, state.rates
                    ur = banks[1].step_all(
                        (om_s[0] - om_m[0], om_s[1] - om_m[1], om_s[2] - om_m[2]),
                        om_s, dt_att)
                    sp = augment(sp, 0.0, 0.0,
                                 (float(ur[0]), float(ur[1]), float(ur[2])),
                                 tc.alpha)
                act_cmd = mix(sp.alpha_s, sp.T_s, pcfg)
            act = injector.apply(act_cmd)
            if k % log_div == 0:
                log_rows.append((t,) + state.pos[:2] + (state.altitude,)
                                + state.att + state.rates + act.as_tuple()
                                + (injector.current.id,))
            state = step_dynamics(state, act, pcfg, dt)
    except (CrashDetected, NonFinite):
        crashed, flag = True, "crash"
    except NumericalBreakdown:
        crashed, flag = True, "numerical"

    flown = None
    dtw = dtw_norm = None
    if len(log_rows) >= 2:
        arr = np.asarray([(r[0], r[1], r[2], r[3]) for r in log_rows])
        flown = Trajectory(t=arr[:, 0], xyz=arr[:, 1:4], source=Source.FLOWN)
        if not crashed:
            ref = resample(from_waypoints(wp, speed), len(flown))
            dtw = dtw_distance(flown, ref)
            dtw_norm = dtw / (len(flown) + len(ref))

    return TrialRecord(
        label=tc.label, regime=tc.regime, seed=tc.seed, crashed=crashed,
        flag=flag, completed=tracker.done, sim_time=t, flown=flown,
        failure_log=failure_log, dtw_to_plan=dtw, dtw_normalized=dtw_norm,
        log_rows=log_rows,
    )


def run_ensemble(cfg: dict, controllers=None, n_trials: int | None = None,
                 seed_base: int | None = None, regimes=("clean", "adverse"),
                 progress=None) -> EnsembleSummary:
    """Run every (controller, regime) group over shared trial seeds.

    Trial i uses seed seed_base + i in every group, so each controller faces
    the same initial jitter and the same failure sequence.
    """
    controllers = controllers if controllers is not None else cfg["harness.controllers"]
    if isinstance(controllers, str):
        controllers = [controllers]
    n_trials = n_trials if n_trials is not None else cfg["harness.trials"]
    seed_base = seed_base if seed_base is not None else cfg["harness.seed_base"]
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")

    records = []
    for spec in controllers:
        kind, alpha = parse_controller(spec)
        if alpha is None:
            alpha = cfg["rcac.alpha"]
        for regime in regimes:
            for i in range(n_trials):
                tc = TrialConfig(controller=kind, alpha=alpha,
                                 seed=seed_base + i,
                                 adverse=(regime == "adverse"), cfg=cfg)
                rec = run_trial(tc)
                records.append(rec)
                if progress is not None:
                    score = "crashed" if rec.crashed else (
                        f"dtw={rec.dtw_to_plan:.1f} m" if rec.dtw_to_plan is not None
                        else "no score")
                    progress(f"{rec.label:10s} {rec.regime:7s} seed={rec.seed} "
                             f"t={rec.sim_time:.0f}s {score}")
    return summarize(records)


def summarize(records: list[TrialRecord]) -> EnsembleSummary:
    """Group statistics (n-1 std, linear-interpolation quartiles) plus the
    clean-regime pairwise self-similarity per controller."""
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple[str, str], GroupStats] = {}
    keys = sorted({(r.label, r.regime) for r in records})
    for key in keys:
        rs = [r for r in records if (r.label, r.regime) == key]
        scored = [r.dtw_to_plan for r in rs if r.dtw_to_plan is not None]
        normed = [r.dtw_normalized for r in rs if r.dtw_normalized is not None]
        n_crashed = sum(r.crashed for r in rs)
        if scored:
            arr = np.asarray(scored)
            mean = float(arr.mean())
            std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
            q = tuple(float(v) for v in np.percentile(arr, [0, 25, 50, 75, 100]))
            mean_norm = float(np.mean(normed))
        else:
            mean = std = mean_norm = math.nan
            q = (math.nan,) * 5
        groups[key] = GroupStats(
            label=key[0], regime=key[1], n_trials=len(rs), n_crashed=n_crashed,
            mean=mean, std=std, mean_normalized=mean_norm, q=q,
            degenerate=len(scored) < 2)

    selfsim = {}
    labels = sorted({r.label for r in records})
    for label in labels:
        flowns = [r.flown for r in records
                  if r.label == label and r.regime == "clean"
                  and not r.crashed and r.flown is not None]
        if len(flowns) >= 2:
            dists = [dtw_distance(a, b)
                     for i, a in enumerate(flowns) for b in flowns[i + 1:]]
            arr = np.asarray(dists)
            selfsim[label] = (float(arr.mean()),
                              float(arr.std(ddof=1)) if len(arr) > 1 else 0.0)
    return EnsembleSummary(groups=groups, records=records,
                           self_similarity=selfsim)


# ---------------------------------------------------------------------------
# output writing


def trial_filename(rec: TrialRecord) -> str:
    return f"{rec.label}__{rec.regime}__seed{rec.seed}.csv"


def write_trial_csv(rec: TrialRecord, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for row in rec.log_rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def write_failure_csv(rec: TrialRecord, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "state_id"])
        for t, sid in rec.failure_log:
            w.writerow([repr(t), sid])


def write_outputs(out_dir: str, cfg: dict, summary: EnsembleSummary) -> None:
    """Persist trial logs, the summary table, box-plot data, and a JSON
    digest with the config hash; everything is byte-deterministic."""
    trials_dir = os.path.join(out_dir, "trials")
    os.makedirs(trials_dir, exist_ok=True)
    for rec in sorted(summary.records, key=lambda r: (r.label, r.regime, r.seed)):
        base = trial_filename(rec)
        write_trial_csv(rec, os.path.join(trials_dir, base))
        write_failure_csv(rec, os.path.join(
            trials_dir, base.replace(".csv", "__failures.csv")))

    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "regime", "n_trials", "n_crashed",
                    "mean_dtw_m", "std_dtw_m", "mean_dtw_normalized_m"])
        for key in sorted(summary.groups):
            gr = summary.groups[key]
            w.writerow([gr.label, gr.regime, gr.n_trials, gr.n_crashed,
                        repr(gr.mean), repr(gr.std), repr(gr.mean_normalized)])

    with open(os.path.join(out_dir, "boxplot.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "regime", "n", "min", "q1", "median", "q3", "max"])
        for key in sorted(summary.groups):
            gr = summary.groups[key]
            w.writerow([gr.label, gr.regime, gr.n_trials - gr.n_crashed]
                       + [repr(v) for v in gr.q])

    digest = {
        "config_hash": config_hash(cfg),
        "seeds": sorted({r.seed for r in summary.records}),
        "groups": {
            f"{label}/{regime}": {
                "n_trials": gr.n_trials,
                "n_crashed": gr.n_crashed,
                "mean_dtw_m": gr.mean,
                "std_dtw_m": gr.std,
                "mean_dtw_normalized_m": gr.mean_normalized,
                "quartiles_m": list(gr.q),
                "degenerate": gr.degenerate,
            }
            for (label, regime), gr in sorted(summary.groups.items())
        },
        "self_similarity_m": {k: list(v) for k, v in
                              sorted(summary.self_similarity.items())},
        "reference_m": REFERENCE_DTW,
        "trials": [
            {
                "label": r.label, "regime": r.regime, "seed": r.seed,
                "crashed": r.crashed, "flag": r.flag, "completed": r.completed,
                "sim_time": r.sim_time, "dtw_to_plan_m": r.dtw_to_plan,
                "dtw_normalized_m": r.dtw_normalized,
            }
            for r in sorted(summary.records,
                            key=lambda r: (r.label, r.regime, r.seed))
        ],
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(digest, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
