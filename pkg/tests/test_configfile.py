import pytest

from edgemig.configfile import load_config, parse_config
from edgemig.world import validate_config


def codes(violations):
    return {v.code for v in violations}


def test_reference_round_trip(reference_config_path):
    config, violations = load_config(reference_config_path)
    assert violations == []
    assert [f.vnf_id for f in config.vnfs] == ["F1", "F2"]
    assert config.vnfs[0].migration_cost == 72000.0
    assert config.vnfs[1].migration_cost == 360000.0
    assert config.vnfs[0].lambda_down == 2e-5
    assert config.vnfs[1].lambda_down == 5e-6
    assert {c.name for c in config.classes} == {"pedestrian", "vehicle", "static"}
    assert config.days == 30
    assert config.policies == ("never", "always", "island")
    assert config.clock.dt_s == 1.0


def test_bundled_ue_driven_config_valid(reference_config_path):
    path = reference_config_path.parent / "ue_driven_small.ini"
    config, violations = load_config(path)
    assert violations == []
    assert validate_config(config) == []
    assert config.vnfs[0].estimator == "ue-driven"


def test_unknown_key_is_hard_error(small_config_ini):
    text = small_config_ini.read_text() + "\n[world]\n"  # duplicate section
    config, violations = parse_config(small_config_ini.read_text() + "densty_typo = 5\n")
    assert config is None
    assert "UNKNOWN_KEY" in codes(violations)


def test_unknown_section_is_hard_error(small_config_ini):
    config, violations = parse_config(small_config_ini.read_text() + "\n[radio]\nfoo = 1\n")
    assert config is None
    assert "UNKNOWN_SECTION" in codes(violations)


def test_missing_section_reported(small_config_ini):
    text = small_config_ini.read_text().replace("[clock]", "[clock_gone]")
    config, violations = parse_config(text)
    assert config is None
    got = codes(violations)
    assert "MISSING_SECTION" in got and "UNKNOWN_SECTION" in got


def test_missing_key_reported(small_config_ini):
    text = small_config_ini.read_text().replace("period_s = 3600.0\n", "")
    config, violations = parse_config(text)
    assert config is None
    assert "MISSING_KEY" in codes(violations)


def test_bad_value_reported(small_config_ini):
    text = small_config_ini.read_text().replace("dt_s = 5.0", "dt_s = five")
    config, violations = parse_config(text)
    assert config is None
    assert "BAD_VALUE" in codes(violations)


def test_config_not_found(tmp_path):
    config, violations = load_config(tmp_path / "nope.ini")
    assert config is None
    assert "CONFIG_NOT_FOUND" in codes(violations)


def test_inline_comments_ignored(small_config_ini):
    text = small_config_ini.read_text().replace("dt_s = 5.0", "dt_s = 5.0  # tick length")
    config, violations = parse_config(text)
    assert violations == []
    assert config.clock.dt_s == 5.0


def test_optional_keys_take_defaults(small_config_ini):
    text = small_config_ini.read_text().replace("rollout_samples = 16\n", "")
    config, violations = parse_config(text)
    assert violations == []
    assert config.rollout_samples == 32
