"""Config file parsing and environment overrides."""

import pytest

from lumenvote.config import AppConfig, ConfigError, apply_env_overrides, load_config

YAML = """
server:
  host: 0.0.0.0
  port: 9000
  data_dir: /tmp/lv-data
roster:
  alice: tok-a
  bob: tok-b
zones:
  - id: floor4
    work_hours: {start: "08:30", end: "18:00"}
    fence:
      box: [37.0, -122.01, 37.002, -122.0]
    mechanism:
      lambda_max: 100
      nominal_outcome: 2
    rewards:
      lottery_threshold_points: 10000
      communal_threshold_points: 50000
      prizes_per_lottery: 2
      seed: 42
  - id: floor5
    fence:
      polygon: [[0, 0], [0, 1], [1, 1], [1, 0]]
    mechanism:
      virtual_cost: [0, 3, 7]
"""


def test_load_config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(YAML)
    cfg = load_config(path)
    assert cfg.host == "0.0.0.0" and cfg.port == 9000
    assert cfg.roster == {"alice": "tok-a", "bob": "tok-b"}
    assert len(cfg.zones) == 2
    z1, z2 = cfg.zones
    assert z1.zone_id == "floor4"
    assert z1.work_hours.start_minute == 8 * 60 + 30
    assert z1.work_hours.end_minute == 18 * 60
    assert z1.rewards.lottery_threshold_milli == 10_000_000
    assert z1.rewards.prizes_per_lottery == 2
    assert z1.fence.contains(37.001, -122.005)
    assert z2.mechanism.virtual_cost == (0, 3, 7)
    assert z2.work_hours.start_minute == 9 * 60  # default 09:00-17:00


def test_env_overrides():
    cfg = AppConfig(port=8030, data_dir="x")
    out = apply_env_overrides(
        cfg, {"LUMENVOTE_PORT": "9100", "LUMENVOTE_DATA_DIR": "/srv/lv"}
    )
    assert out.port == 9100
    assert out.data_dir == "/srv/lv"
    assert out.host == cfg.host


def test_bad_configs(tmp_path):
    for text in (
        "zones:\n  - work_hours: {}\n",  # missing id
        "zones:\n  - id: a\n    fence: {circle: 1}\n",
        "zones:\n  - id: a\n  - id: a\n",
    ):
        path = tmp_path / "bad.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_config(path)


def test_bad_work_hours():
    from lumenvote.config import WorkHours

    with pytest.raises(ConfigError):
        WorkHours(start_minute=1000, end_minute=100)
