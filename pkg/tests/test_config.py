"""Key-value config: parsing, defaults, hashing, and object builders."""

import math

import pytest

from failbench.config import (DEFAULTS, attitude_gains, config_hash,
                              dump_config, load_config, parse_value,
                              plant_config, position_gains)


class TestParseValue:
    def test_scalars(self):
        assert parse_value("3") == 3
        assert parse_value("3.5") == 3.5
        assert parse_value("true") is True
        assert parse_value("off") is False
        assert parse_value("inf") == math.inf
        assert parse_value("hold_last") == "hold_last"

    def test_pair(self):
        assert parse_value("20:400") == (20, 400)
        assert parse_value("20:inf") == (20, math.inf)

    def test_lists(self):
        assert parse_value("1, 2, 3, 4") == [1, 2, 3, 4]
        assert parse_value("20:50, 100:150") == [(20, 50), (100, 150)]
        assert parse_value("pid, rcac@0.5") == ["pid", "rcac@0.5"]
        assert parse_value("[]") == []


class TestLoadConfig:
    def test_defaults_round_trip(self):
        cfg = load_config()
        assert cfg == dict(DEFAULTS)

    def test_file_overlay(self, tmp_path):
        path = tmp_path / "bench.cfg"
        path.write_text(
            "# comment line\n"
            "failure.p_loop = 0.25\n"
            "mission.orders = 1, 2   # inline comment\n"
            "failure.switch_schedule = 10:200, 300:inf\n"
            "pid.k_theta = 4.0\n")
        cfg = load_config(str(path))
        assert cfg["failure.p_loop"] == 0.25
        assert cfg["mission.orders"] == [1, 2]
        assert cfg["failure.switch_schedule"] == [(10, 200), (300, math.inf)]
        assert cfg["pid.k_theta"] == 4.0
        assert cfg["failure.p_ground"] == 0.4

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("failure.p_lop = 0.3\n")
        with pytest.raises(KeyError):
            load_config(str(path))

    def test_override_dict(self):
        cfg = load_config(overrides={"harness.trials": 3})
        assert cfg["harness.trials"] == 3
        with pytest.raises(KeyError):
            load_config(overrides={"nope": 1})

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("just some words\n")
        with pytest.raises(ValueError):
            load_config(str(path))


class TestHash:
    def test_stable(self):
        assert config_hash(load_config()) == config_hash(load_config())

    def test_sensitive_to_values(self):
        a = load_config()
        b = load_config(overrides={"failure.p_loop": 0.31})
        assert config_hash(a) != config_hash(b)

    def test_dump_parses_back(self, tmp_path):
        cfg = load_config()
        path = tmp_path / "dumped.cfg"
        path.write_text(dump_config(cfg))
        assert load_config(str(path)) == cfg


class TestBuilders:
    def test_eleven_gain_keys(self):
        keys = [k for k in DEFAULTS if k.startswith("pid.k_")]
        assert len(keys) == 11

    def test_attitude_gains(self):
        g = attitude_gains(load_config())
        assert g.k_theta == DEFAULTS["pid.k_theta"]
        assert g.k_ff == (DEFAULTS["pid.k_ff_roll"], DEFAULTS["pid.k_ff_pitch"],
                          DEFAULTS["pid.k_ff_yaw"])
        assert g.bank_limit == pytest.approx(math.radians(50.0))

    def test_plant_config(self):
        p = plant_config(load_config(), dt=0.004)
        assert p.mass == DEFAULTS["plant.mass"]
        assert p.dt_dynamics == 0.004
        assert p.v_trim_ias == p.v_trim_tas

    def test_position_gains(self):
        g = position_gains(load_config())
        assert g.lookahead == DEFAULTS["position.lookahead"]

    def test_rcac_table_defaults(self):
        cfg = load_config()
        assert cfg["rcac.pitch.p0"] == 1.0
        assert cfg["rcac.pitch.ru"] == 0.001
        assert cfg["rcac.pitch_rate.p0"] == 1e-4
        assert cfg["rcac.pitch_rate.ru"] == 0.1
        assert cfg["rcac.roll.p0"] == 1.0
        assert cfg["rcac.roll_rate.ru"] == 0.1
        assert cfg["rcac.yaw_rate.p0"] == 1e-4
        assert cfg["rcac.yaw_rate.ru"] == 0.1
