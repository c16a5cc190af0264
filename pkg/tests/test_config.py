"""Key-value config files and their merge/override semantics."""

import pytest

from stc.config import (
    build_train_config,
    effective_config_string,
    merge_config,
    parse_config_file,
)
from stc.errors import DataError


class TestParseConfigFile:
    def test_basic_keys_and_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# experiment settings\n"
            "loss.tau = 0.3\n"
            "train.epochs = 20   # short run\n"
            "\n"
            "model.hidden = 32,16\n"
        )
        values = parse_config_file(path)
        assert values == {
            "loss.tau": "0.3",
            "train.epochs": "20",
            "model.hidden": "32,16",
        }

    def test_unknown_key_rejected_with_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("loss.tua = 0.3\n")
        with pytest.raises(DataError, match=":1"):
            parse_config_file(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("loss.tau 0.3\n")
        with pytest.raises(DataError):
            parse_config_file(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataError):
            parse_config_file(tmp_path / "absent.cfg")


class TestMergeConfig:
    def test_overrides_win(self):
        merged = merge_config({"loss.tau": "0.3"}, {"loss.tau": "0.7"})
        assert merged["loss.tau"] == 0.7

    def test_types_parsed(self):
        merged = merge_config({
            "train.epochs": "7",
            "model.hidden": "64,32",
            "loss.denominator_mode": "paper_literal",
        })
        assert merged["train.epochs"] == 7
        assert merged["model.hidden"] == (64, 32)
        assert merged["loss.denominator_mode"] == "paper_literal"

    def test_bad_value_rejected(self):
        with pytest.raises(DataError, match="train.epochs"):
            merge_config({"train.epochs": "many"})

    def test_unknown_key_rejected(self):
        with pytest.raises(DataError):
            merge_config({}, {"nope": "1"})


class TestBuildTrainConfig:
    def test_defaults(self):
        cfg = build_train_config({})
        assert cfg.epochs == 100
        assert cfg.batch_size == 64
        assert cfg.lr == 5e-4
        assert cfg.n_symbols == 64
        assert cfg.loss.tau == 0.2
        assert cfg.augment.jitter_sigma == 0.1
        assert cfg.scheduler.patience == 10

    def test_values_flow_through(self):
        cfg = build_train_config(merge_config({
            "loss.lambda": "2.0",
            "augment.symbol_edit_rate": "0.1",
            "model.z_dim": "16",
            "scheduler.factor": "0.25",
        }))
        assert cfg.loss.lam == 2.0
        assert cfg.augment.symbol_edit_rate == 0.1
        assert cfg.z_dim == 16
        assert cfg.scheduler.factor == 0.25


def test_effective_config_string_sorted():
    text = effective_config_string({"train.epochs": 5, "loss.tau": 0.2})
    assert text == "loss.tau=0.2 train.epochs=5"
