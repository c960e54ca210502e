"""Markov failure chain: enumeration, transition structure, sampling, injection."""

import itertools

import numpy as np
import pytest

from failbench.failure import (ACTUATOR_BITS, AIL_L, AIL_R,
                               ELE, HOLD_LAST, RUD, THR, ZERO, FailureState,
                               Injector, InvalidProbability, TransitionModel,
                               build_transition_model, enumerate_states, gate,
                               inject, states_table, step_chain)
from failbench.plant import ActuatorVector


def brute_force_valid_masks():
    """Independent enumeration: all 5-bit subsets minus the two exclusions."""
    out = []
    for bits in itertools.product((0, 1), repeat=5):
        mask = sum(b << i for i, b in enumerate(bits))
        if (mask & AIL_L and mask & AIL_R) or (mask & ELE and mask & THR):
            continue
        out.append(mask)
    return out


class TestEnumerateStates:
    def test_count_is_18(self):
        assert len(enumerate_states()) == 18
        assert len(brute_force_valid_masks()) == 18

    def test_matches_brute_force(self):
        assert {s.mask for s in enumerate_states()} == set(brute_force_valid_masks())

    def test_ground_first(self):
        states = enumerate_states()
        assert states[0].mask == 0
        assert states[0].id == 0
        assert states[0].is_ground

    def test_canonical_order(self):
        states = enumerate_states()
        keys = [(bin(s.mask).count("1"), s.mask) for s in states]
        assert keys == sorted(keys)
        assert [s.id for s in states] == list(range(18))

    def test_singletons_present(self):
        masks = {s.mask for s in enumerate_states()}
        for bit in ACTUATOR_BITS:
            assert bit in masks

    def test_forbidden_absent(self):
        masks = {s.mask for s in enumerate_states()}
        assert ELE | THR not in masks
        assert AIL_L | AIL_R not in masks


class TestTransitionModel:
    def setup_method(self):
        self.model = build_transition_model()

    def test_row_sums(self):
        for row in self.model.rows:
            assert abs(sum(row) - 1.0) <= 1e-12
            assert all(p >= 0 for p in row)

    def test_ground_row(self):
        row = self.model.rows[0]
        assert row[0] == pytest.approx(0.7, abs=1e-15)
        singles = [s.id for s in self.model.states
                   if bin(s.mask).count("1") == 1]
        assert len(singles) == 5
        for j in singles:
            assert row[j] == pytest.approx(0.06, abs=1e-15)

    def test_from_ele_neighbors(self):
        # one-bit-different valid subsets of {ELE}: add AIL-L, AIL-R, or RUD
        i = self.model.index_of(ELE)
        row = self.model.rows[i]
        expected = {ELE | AIL_L, ELE | AIL_R, ELE | RUD}
        got = {self.model.states[j].mask for j, p in enumerate(row)
               if p > 0 and j not in (0, i)}
        assert got == expected
        for mask in expected:
            assert row[self.model.index_of(mask)] == pytest.approx(0.1, abs=1e-15)
        assert row[i] == pytest.approx(0.3)
        assert row[0] == pytest.approx(0.4)

    def test_from_ail_l_rud_neighbors(self):
        i = self.model.index_of(AIL_L | RUD)
        row = self.model.rows[i]
        expected = {AIL_L | RUD | ELE, AIL_L | RUD | THR, AIL_L, RUD}
        got = {self.model.states[j].mask for j, p in enumerate(row)
               if p > 0 and j not in (0, i)}
        assert got == expected
        for mask in expected:
            assert row[self.model.index_of(mask)] == pytest.approx(0.075, abs=1e-15)

    def test_neighbors_differ_by_one_actuator(self):
        for s in self.model.states[1:]:
            row = self.model.rows[s.id]
            for j, p in enumerate(row):
                if p > 0 and j not in (0, s.id):
                    diff = s.mask ^ self.model.states[j].mask
                    assert bin(diff).count("1") == 1

    def test_invalid_probability(self):
        with pytest.raises(InvalidProbability):
            build_transition_model(p_loop=0.7, p_ground=0.4)
        with pytest.raises(InvalidProbability):
            build_transition_model(p_loop=-0.1)

    def test_stationary(self):
        # the matrix is fixed at build time; two builds are identical
        other = build_transition_model()
        assert other.rows == self.model.rows


class TestStepChain:
    def test_absorbing_row(self):
        states = tuple(enumerate_states())
        n = len(states)
        rows = []
        for i in range(n):
            row = [0.0] * n
            row[i] = 1.0
            rows.append(tuple(row))
        model = TransitionModel(states=states, rows=rows, p_loop=1.0, p_ground=0.0)
        rng = np.random.default_rng(0)
        s = states[7]
        for _ in range(50):
            s = step_chain(model, s, rng)
            assert s.id == 7

    def test_empirical_frequencies(self):
        model = build_transition_model()
        rng = np.random.default_rng(42)
        counts = np.zeros((18, 18))
        s = model.states[0]
        n = 200_000
        for _ in range(n):
            nxt = step_chain(model, s, rng)
            counts[s.id, nxt.id] += 1
            s = nxt
        visits = counts.sum(axis=1)
        assert (visits > 0).all(), "chain failed to reach every state"
        freq = counts / np.maximum(visits[:, None], 1)
        mat = np.asarray(model.rows)
        # rarest rows see ~1e3 visits here; 0.05 is a comfortable 3-sigma bound
        assert np.abs(freq - mat).max() < 0.05
        # occupancy-weighted error converges much faster
        assert np.abs(counts / n - (visits[:, None] / n) * mat).max() < 0.01

    def test_forbidden_never_sampled(self):
        model = build_transition_model()
        rng = np.random.default_rng(7)
        s = model.states[0]
        for _ in range(100_000):
            s = step_chain(model, s, rng)
            assert not (s.mask & ELE and s.mask & THR)
            assert not (s.mask & AIL_L and s.mask & AIL_R)


class TestGate:
    def setup_method(self):
        self.states = enumerate_states()
        self.ground = self.states[0]

    def test_off_forces_ground(self):
        for s in self.states:
            assert gate(False, s, self.ground) is self.ground

    def test_on_passes_through(self):
        for s in self.states:
            assert gate(True, s, self.ground) is s

    def test_toggle_restarts_from_ground(self):
        s = self.states[9]
        off = gate(False, s, self.ground)
        assert off.is_ground
        # turning back on, the caller steps the chain from the gated state
        assert gate(True, off, self.ground) is off


class TestInjector:
    def test_hold_last(self):
        inj = Injector(mode=HOLD_LAST)
        inj.prime(ActuatorVector(ele=0.2, thr=0.5))
        inj.set_state(FailureState(id=3, mask=ELE))
        out = inj.apply(ActuatorVector(ele=0.5, thr=0.8))
        assert out.ele == 0.2
        assert out.thr == 0.8

    def test_zero_mode(self):
        inj = Injector(mode=ZERO)
        inj.prime(ActuatorVector(thr=0.5))
        inj.set_state(FailureState(id=4, mask=THR))
        out = inj.apply(ActuatorVector(thr=0.8))
        assert out.thr == 0.0

    def test_ground_pass_through_bit_exact(self):
        inj = Injector()
        cmds = ActuatorVector(0.123456789, -0.987654321, 0.1, 0.7, -0.3)
        out = inj.apply(cmds)
        assert out == cmds

    def test_hold_persists_across_state_change(self):
        # ELE stuck in both states; its held value must not re-snapshot
        inj = Injector(mode=HOLD_LAST)
        inj.prime(ActuatorVector(ele=0.11))
        inj.set_state(FailureState(id=3, mask=ELE))
        inj.apply(ActuatorVector(ele=0.9, rud=0.2))
        inj.set_state(FailureState(id=9, mask=ELE | RUD))
        out = inj.apply(ActuatorVector(ele=0.9, rud=0.9))
        assert out.ele == 0.11
        assert out.rud == 0.2   # rudder froze at its last passed-through value

    def test_release_clears_held(self):
        inj = Injector(mode=HOLD_LAST)
        inj.prime(ActuatorVector(ele=0.3))
        inj.set_state(FailureState(id=3, mask=ELE))
        inj.apply(ActuatorVector(ele=0.9))
        inj.set_state(FailureState(id=0, mask=0))
        out = inj.apply(ActuatorVector(ele=0.7))
        assert out.ele == 0.7
        assert "ele" not in inj.held

    def test_inject_wrapper(self):
        inj = Injector(mode=ZERO)
        inj.set_state(FailureState(id=5, mask=RUD))
        assert inject(ActuatorVector(rud=0.4), inj).rud == 0.0

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            Injector(mode="explode")


def test_states_table_layout():
    rows = states_table()
    assert len(rows) == 18
    assert rows[0] == {"id": 0, "mask": 0, "AIL-L": 0, "AIL-R": 0,
                       "ELE": 0, "THR": 0, "RUD": 0}
    for row in rows:
        assert not (row["ELE"] and row["THR"])
        assert not (row["AIL-L"] and row["AIL-R"])
