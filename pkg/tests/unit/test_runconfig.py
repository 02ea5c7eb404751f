"""Tests for run-config loading, flag overrides and schema validation."""

from __future__ import annotations

import pytest

from dgnet.errors import ConfigError
from dgnet.runconfig import load_run_config, parse_level, read_config_file


class TestLoad:
    def test_defaults(self):
        cfg = load_run_config("solve")
        assert cfg.problem == "sod"
        assert cfg.engine == "dg"
        assert cfg.N is None

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("problem: lax\nN: 2\ndt: 1.0e-4\n")
        cfg = load_run_config("solve", path, {"N": 3, "dt": None})
        assert cfg.problem == "lax"
        assert cfg.N == 3
        assert cfg.dt == 1e-4

    def test_json_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{"problem": "vortex", "orders": [1, 2], "levels": ["h", "h/2"]}')
        cfg = load_run_config("convergence", path)
        assert cfg.orders == [1, 2]
        assert cfg.levels == ["h", "h/2"]

    def test_nested_train_section(self, tmp_path):
        path = tmp_path / "train.yaml"
        path.write_text("problem: sod\ntrain:\n  mode: naive\n  window: 15\n")
        cfg = load_run_config("train", path, {"train.delta": 0.01})
        assert cfg.train.mode == "naive"
        assert cfg.train.window == 15
        assert cfg.train.delta == 0.01
        # untouched keys fall back to settings
        assert cfg.train.learning_rate == 1e-3

    def test_comma_lists(self):
        cfg = load_run_config("generate-data", overrides={"gammas": "1.2,1.4", "members": "0,3"})
        assert cfg.gammas == [1.2, 1.4]
        assert cfg.members == [0, 3]


class TestValidation:
    def test_unknown_nested_key(self, tmp_path):
        path = tmp_path / "train.yaml"
        path.write_text("train:\n  delta_typo: 0.1\n")
        with pytest.raises(ConfigError) as exc:
            load_run_config("train", path)
        assert exc.value.path == "train.delta_typo"

    def test_unknown_top_key(self):
        with pytest.raises(ConfigError) as exc:
            load_run_config("solve", overrides={"orderr": 2})
        assert exc.value.path == "orderr"

    @pytest.mark.parametrize("key,value", [("N", "two"), ("N", True), ("dt", "fast"), ("limiter", "yes"),
                                           ("problem", 3)])
    def test_type_errors(self, key, value):
        with pytest.raises(ConfigError) as exc:
            load_run_config("solve", overrides={key: value})
        assert exc.value.path == key

    def test_list_item_path(self):
        with pytest.raises(ConfigError) as exc:
            load_run_config("convergence", overrides={"orders": ["1", "x"]})
        assert exc.value.path == "orders[1]"

    def test_dataclass_checks(self):
        with pytest.raises(ConfigError, match="checkpoint"):
            load_run_config("solve", overrides={"engine": "dgnet"})
        with pytest.raises(ConfigError, match="train.mode"):
            load_run_config("train", overrides={"train.mode": "both"})

    def test_wave_speed_source_is_exclusive(self):
        with pytest.raises(ConfigError):
            load_run_config("wave-speed")
        with pytest.raises(ConfigError):
            load_run_config("wave-speed", overrides={"checkpoint": "a.npz", "oracle": "central"})
        assert load_run_config("wave-speed", overrides={"oracle": "central"}).oracle == "central"

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            load_run_config("plot")


class TestFiles:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            read_config_file(tmp_path / "nope.yaml")

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            read_config_file(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert read_config_file(path) == {}


class TestLevels:
    @pytest.mark.parametrize("text,level", [("h", 0), ("h/2", 1), ("h/4", 2), ("h / 8", 3), ("3", 3), (2, 2)])
    def test_parse(self, text, level):
        assert parse_level(text) == level

    @pytest.mark.parametrize("text", ["h/3", "2h", "h/0", ""])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_level(text)
