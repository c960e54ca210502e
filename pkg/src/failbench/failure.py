"""Stationary Markov compound-failure chain over flyable actuator subsets.

Five actuators can gum up: left/right aileron, elevator, throttle, rudder.
Subsets that contain both ailerons or both elevator and throttle are never
simulated (unrecoverable / field-safety exclusions), leaving 18 states with
the no-failure ground state first.  The chain ticks once per simulated
second; an arming switch gates it, and an injector freezes or zeroes the
commanded deflections of the currently stuck actuators.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field, replace

from .plant import ActuatorVector

AIL_L = 0x01
AIL_R = 0x02
ELE = 0x04
THR = 0x08
RUD = 0x10

ACTUATOR_BITS = (AIL_L, AIL_R, ELE, THR, RUD)
ACTUATOR_NAMES = ("AIL-L", "AIL-R", "ELE", "THR", "RUD")
ACTUATOR_FIELDS = ("ail_l", "ail_r", "ele", "thr", "rud")

HOLD_LAST = "hold_last"
ZERO = "zero"


class InvalidProbability(ValueError):
    """Loop-back / ground probabilities out of range."""


@dataclass(frozen=True)
class FailureState:
    """One node of the chain: the set of stuck actuators as a 5-bit mask."""

    id: int
    mask: int

    def stuck(self, bit: int) -> bool:
        return bool(self.mask & bit)

    def actuators(self) -> tuple[str, ...]:
        return tuple(n for n, b in zip(ACTUATOR_NAMES, ACTUATOR_BITS) if self.mask & b)

    @property
    def is_ground(self) -> bool:
        return self.mask == 0


def _valid_mask(mask: int) -> bool:
    if mask & AIL_L and mask & AIL_R:
        return False
    if mask & ELE and mask & THR:
        return False
    return True


def enumerate_states() -> list[FailureState]:
    """All flyable failure subsets in canonical order.

    Ground state (empty set) first, then by popcount, ties broken by mask
    value.  The exclusion rules leave 18 of the 32 subsets.
    """
    masks = [m for m in range(32) if _valid_mask(m)]
    masks.sort(key=lambda m: (bin(m).count("1"), m))
    return [FailureState(id=i, mask=m) for i, m in enumerate(masks)]


def _neighbors(mask: int, valid: set[int]) -> list[int]:
    """Valid states one actuator away from `mask`, excluding ground and self."""
    out = []
    for bit in ACTUATOR_BITS:
        flipped = mask ^ bit
        if flipped != 0 and flipped != mask and flipped in valid:
            out.append(flipped)
    return out


@dataclass(frozen=True)
class TransitionModel:
    """Row-stochastic transition matrix over the canonical state list."""

    states: tuple[FailureState, ...]
    rows: tuple[tuple[float, ...], ...]
    p_loop: float
    p_ground: float
    period: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "_cdfs", tuple(_cumulative(r) for r in self.rows))

    def index_of(self, mask: int) -> int:
        for s in self.states:
            if s.mask == mask:
                return s.id
        raise KeyError(f"no state with mask {mask:#04x}")

    def row(self, state: FailureState) -> tuple[float, ...]:
        return self.rows[state.id]


def build_transition_model(p_loop: float = 0.3, p_ground: float = 0.4) -> TransitionModel:
    """Build the chain: stay with p_loop, revert to ground with p_ground,
    split the remainder equally over states one actuator away.

    The ground row merges both probabilities into P(stay) and splits the
    remainder over the five single-failure states, so every departure from
    ground is a singleton failure.
    """
    if p_loop < 0 or p_ground < 0 or p_loop + p_ground > 1 + 1e-12:
        raise InvalidProbability(f"p_loop={p_loop}, p_ground={p_ground}")
    states = enumerate_states()
    valid = {s.mask for s in states}
    index = {s.mask: s.id for s in states}
    n = len(states)
    rows = []
    for s in states:
        row = [0.0] * n
        if s.is_ground:
            singles = [index[b] for b in ACTUATOR_BITS]
            row[s.id] = p_loop + p_ground
            for j in singles:
                row[j] = (1.0 - p_loop - p_ground) / len(singles)
        else:
            nbrs = [index[m] for m in _neighbors(s.mask, valid)]
            row[s.id] = p_loop
            rest = 1.0 - p_loop - p_ground
            if nbrs:
                row[0] = p_ground
                for j in nbrs:
                    row[j] = rest / len(nbrs)
            else:
                row[0] = p_ground + rest
        rows.append(tuple(row))
    return TransitionModel(states=tuple(states), rows=tuple(rows),
                           p_loop=p_loop, p_ground=p_ground)


def _cumulative(row: tuple[float, ...]) -> tuple[float, ...]:
    acc, out = 0.0, []
    for p in row:
        acc += p
        out.append(acc)
    out[-1] = 1.0
    return tuple(out)


def step_chain(model: TransitionModel, current: FailureState, rng) -> FailureState:
    """Sample the next state by inverse CDF over the canonical order.

    `rng` is anything with a `random() -> float in [0,1)` method
    (numpy Generator or stdlib Random).
    """
    j = bisect_right(model._cdfs[current.id], rng.random())
    if j >= len(model.states):
        j = len(model.states) - 1
    return model.states[j]


def gate(switch_on: bool, proposed: FailureState, ground: FailureState) -> FailureState:
    """Arming switch: off forces the ground state, on passes through."""
    return proposed if switch_on else ground


@dataclass
class Injector:
    """Applies the current failure state to commanded deflections.

    HOLD_LAST freezes each stuck actuator at the value it last output
    before its failure onset; ZERO forces stuck actuators to exactly 0.0
    (a broken link).  Held values persist while the actuator stays stuck
    across state transitions and are discarded on release.
    """

    mode: str = HOLD_LAST
    current: FailureState = field(default_factory=lambda: FailureState(0, 0))
    held: dict[str, float] = field(default_factory=dict)
    _last_out: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (HOLD_LAST, ZERO):
            raise ValueError(f"unknown injector mode {self.mode!r}")

    def prime(self, cmds: ActuatorVector) -> None:
        """Seed the last-output memory, e.g. with the trim deflections."""
        for name in ACTUATOR_FIELDS:
            self._last_out[name] = getattr(cmds, name)

    def set_state(self, state: FailureState) -> None:
        """Switch to a new failure state, snapshotting newly stuck actuators."""
        for name, bit in zip(ACTUATOR_FIELDS, ACTUATOR_BITS):
            now_stuck = bool(state.mask & bit)
            was_stuck = bool(self.current.mask & bit)
            if now_stuck and not was_stuck:
                self.held[name] = self._last_out.get(name, 0.0)
            elif was_stuck and not now_stuck:
                self.held.pop(name, None)
        self.current = state

    def apply(self, cmds: ActuatorVector) -> ActuatorVector:
        """Override stuck actuators; pass the rest through bit-exact."""
        out = cmds
        if self.current.mask:
            kw = {}
            for name, bit in zip(ACTUATOR_FIELDS, ACTUATOR_BITS):
                if self.current.mask & bit:
                    kw[name] = 0.0 if self.mode == ZERO else self.held[name]
            out = replace(cmds, **kw)
        for name in ACTUATOR_FIELDS:
            self._last_out[name] = getattr(out, name)
        return out


def inject(cmds: ActuatorVector, inj: Injector) -> ActuatorVector:
    return inj.apply(cmds)


def states_table() -> list[dict]:
    """State table rows (id, mask, per-actuator booleans) for the CLI dump."""
    rows = []
    for s in enumerate_states():
        row = {"id": s.id, "mask": s.mask}
        for name, bit in zip(ACTUATOR_NAMES, ACTUATOR_BITS):
            row[name] = int(bool(s.mask & bit))
        rows.append(row)
    return rows
