"""Configuration defaults, validation, and override precedence."""

from __future__ import annotations

import json
import math

import pytest

from scenemem.config import EngineConfig
from scenemem.errors import ConfigError


class TestDefaults:
    def test_default_values(self):
        config = EngineConfig()
        assert config.w == 1
        assert config.k == 5
        assert config.delta_t == 1.0
        assert config.delta_l == 0.0
        assert config.delta_tau == 0.7
        assert config.synonym_threshold == 0.8
        assert config.damping == 0.85
        assert config.tolerance == 1e-6
        assert config.dimension == 256
        assert config.participant_mode == "mentions"
        assert config.fusion == "promote"
        assert config.provider == "reference"

    def test_config_is_immutable(self):
        config = EngineConfig()
        with pytest.raises(Exception):
            config.w = 2


class TestValidation:
    def test_negative_w_rejected(self):
        with pytest.raises(ConfigError, match="w must be"):
            EngineConfig(w=-1)

    def test_non_integer_w_rejected(self):
        with pytest.raises(ConfigError, match="w must be"):
            EngineConfig(w=1.5)

    def test_zero_k_rejected(self):
        with pytest.raises(ConfigError, match="k must be"):
            EngineConfig(k=0)

    def test_negative_thresholds_rejected(self):
        for name in ("delta_t", "delta_l", "delta_tau"):
            with pytest.raises(ConfigError, match=name):
                EngineConfig(**{name: -0.1})

    def test_nan_threshold_rejected(self):
        with pytest.raises(ConfigError, match="delta_t"):
            EngineConfig(delta_t=math.nan)

    def test_infinite_threshold_allowed(self):
        assert EngineConfig(delta_t=math.inf).delta_t == math.inf

    def test_damping_must_be_strictly_inside_unit_interval(self):
        with pytest.raises(ConfigError, match="damping"):
            EngineConfig(damping=1.0)
        with pytest.raises(ConfigError, match="damping"):
            EngineConfig(damping=0.0)
        assert EngineConfig(damping=0.5).damping == 0.5

    def test_synonym_threshold_range(self):
        with pytest.raises(ConfigError, match="synonym_threshold"):
            EngineConfig(synonym_threshold=1.5)
        assert EngineConfig(synonym_threshold=-1.0).synonym_threshold == -1.0

    def test_nonpositive_tolerance_rejected(self):
        with pytest.raises(ConfigError, match="tolerance"):
            EngineConfig(tolerance=0.0)

    def test_bad_participant_mode_rejected(self):
        with pytest.raises(ConfigError, match="participant_mode"):
            EngineConfig(participant_mode="everyone")

    def test_bad_fusion_mode_rejected(self):
        with pytest.raises(ConfigError, match="fusion"):
            EngineConfig(fusion="average")

    def test_bad_provider_rejected(self):
        with pytest.raises(ConfigError, match="provider"):
            EngineConfig(provider="oracle")

    def test_http_provider_requires_endpoint(self):
        with pytest.raises(ConfigError, match="endpoint"):
            EngineConfig(provider="http")
        config = EngineConfig(provider="http", endpoint="https://llm.test/v1")
        assert config.endpoint == "https://llm.test/v1"

    def test_bad_dimension_rejected(self):
        with pytest.raises(ConfigError, match="dimension"):
            EngineConfig(dimension=0)

    def test_bad_max_iters_rejected(self):
        with pytest.raises(ConfigError, match="max_iters"):
            EngineConfig(max_iters=0)


class TestLoading:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys: window"):
            EngineConfig.load(file_values={"window": 2})

    def test_from_dict(self):
        config = EngineConfig.from_dict({"w": 2, "k": 7})
        assert (config.w, config.k) == (2, 7)

    def test_lexicon_list_becomes_tuple(self):
        config = EngineConfig.from_dict({"lexicon": ["Ana", "Bo"]})
        assert config.lexicon == ("Ana", "Bo")

    def test_lexicon_string_rejected(self):
        with pytest.raises(ConfigError, match="lexicon"):
            EngineConfig.from_dict({"lexicon": "Ana"})

    def test_lexicon_non_string_members_rejected(self):
        with pytest.raises(ConfigError, match="lexicon"):
            EngineConfig.from_dict({"lexicon": ["Ana", 3]})

    def test_from_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"w": 3, "delta_tau": 0.5}))
        config = EngineConfig.from_file(path)
        assert config.w == 3
        assert config.delta_tau == 0.5

    def test_overrides_beat_file_values(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"w": 3, "k": 9}))
        config = EngineConfig.from_file(path, overrides={"w": 0})
        assert config.w == 0
        assert config.k == 9

    def test_missing_file_is_a_config_error(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            EngineConfig.from_file(tmp_path / "absent.json")

    def test_invalid_json_is_a_config_error(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            EngineConfig.from_file(path)

    def test_non_object_file_is_a_config_error(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            EngineConfig.from_file(path)

    def test_with_overrides_returns_new_config(self):
        base = EngineConfig(w=1)
        updated = base.with_overrides({"w": 4})
        assert updated.w == 4
        assert base.w == 1

    def test_to_dict_round_trip(self):
        config = EngineConfig(w=2, lexicon=("Ana",), delta_tau=0.3)
        assert EngineConfig.from_dict(config.to_dict()) == config

    def test_to_dict_covers_every_field(self):
        assert set(EngineConfig().to_dict()) == set(EngineConfig.field_names())
