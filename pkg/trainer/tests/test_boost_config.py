import json

import pytest

from synboost.config import BoostConfig
from synboost.errors import ConfigError, InputError


class TestValidation:
    def test_defaults_are_valid(self):
        BoostConfig().validate()

    def test_stop_ratio_of_one_is_allowed(self):
        BoostConfig(stop_ratio=1.0).validate()

    @pytest.mark.parametrize(
        "field,value",
        [
            ("stop_ratio", 0.0),
            ("stop_ratio", -0.1),
            ("stop_ratio", 1.2),
            ("sentence_loss_weight", -0.5),
            ("distance", "euclidean"),
            ("learning_rate", 0.0),
            ("learning_rate", -1.0),
            ("epochs", 0),
            ("expression_dim", 0),
            ("char_dim", 0),
            ("hidden_dim", 0),
            ("hidden_dim", 129),
        ],
    )
    def test_bad_values_rejected(self, field, value):
        with pytest.raises(ConfigError):
            BoostConfig(**{field: value}).validate()

    def test_stop_threshold_factor(self):
        assert BoostConfig(stop_ratio=0.60).stop_threshold_factor == pytest.approx(0.40)
        assert BoostConfig(stop_ratio=1.0).stop_threshold_factor == 0.0


class TestFromDict:
    def test_known_keys_applied(self):
        config = BoostConfig.from_dict({"stop_ratio": 0.5, "epochs": 7})
        assert config.stop_ratio == 0.5
        assert config.epochs == 7

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="stop_ratoi"):
            BoostConfig.from_dict({"stop_ratoi": 0.5})


class TestLoad:
    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"stop_ratio": 0.7, "seed": 3}), encoding="utf-8")
        config = BoostConfig.load(str(path))
        assert config.stop_ratio == 0.7
        assert config.seed == 3

    def test_overrides_win(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"epochs": 9}), encoding="utf-8")
        assert BoostConfig.load(str(path), {"epochs": 2}).epochs == 2

    def test_miner_config_file_is_accepted(self, tmp_path):
        # The miner writes stop_ratio alongside its own knobs; those extra
        # keys must not be treated as typos when the same file drives us.
        path = tmp_path / "shared.json"
        shared = {"input_path": "kg.tsv", "top_k": 5, "prune_q": 0.1, "stop_ratio": 0.55}
        path.write_text(json.dumps(shared), encoding="utf-8")
        config = BoostConfig.load(str(path))
        assert config.stop_ratio == 0.55

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            BoostConfig.load(str(tmp_path / "absent.json"))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            BoostConfig.load(str(path))

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigError):
            BoostConfig.load(str(path))
