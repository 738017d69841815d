"""Flat key-value config parsing, defaults, validation, env overrides."""

import pytest

from desocial.backbones import CANONICAL_POOL, BackboneKind
from desocial.config import apply_env_overrides, load_config
from desocial.errors import ConfigError


def write(tmp_path, text):
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    return str(path)


def test_empty_file_resolves_all_defaults(tmp_path):
    cfg = load_config(write(tmp_path, ""))
    assert cfg.T == 40
    assert cfg.n == 5
    assert cfg.K_values == (2, 3, 5)
    assert cfg.pool == CANONICAL_POOL
    assert cfg.start_test_period == 30
    assert cfg.end_test_period == 39
    assert cfg.strategy == "personalized"


def test_alpha_and_gamma_parse(tmp_path):
    cfg = load_config(write(tmp_path, "alpha = -0.1\ngamma = 750\n"))
    assert cfg.alpha == -0.1
    assert cfg.gamma == 750


def test_n_zero_rejected(tmp_path):
    with pytest.raises(ConfigError, match="n must be >= 1"):
        load_config(write(tmp_path, "n = 0\n"))


def test_unknown_key_named(tmp_path):
    with pytest.raises(ConfigError, match="mystery"):
        load_config(write(tmp_path, "mystery = 3\n"))


def test_comments_and_blank_lines(tmp_path):
    cfg = load_config(write(tmp_path, "# full line\nT = 12  # trailing\n\n"))
    assert cfg.T == 12
    assert cfg.start_test_period == 2  # max(2, 12 - 10)
    assert cfg.end_test_period == 11


def test_pool_and_fixed_strategy(tmp_path):
    cfg = load_config(write(
        tmp_path, "pool = SGC,MLP\nstrategy = fixed:SGC\n"))
    assert cfg.pool == (BackboneKind.SGC, BackboneKind.MLP)
    assert cfg.strategy == "fixed"
    assert cfg.fixed_backbone is BackboneKind.SGC
    cfg2 = load_config(write(tmp_path, "strategy = fixed(GCN)\n"))
    assert cfg2.fixed_backbone is BackboneKind.GCN


def test_fixed_backbone_must_be_in_pool(tmp_path):
    with pytest.raises(ConfigError, match="pool"):
        load_config(write(tmp_path,
                          "pool = MLP\nstrategy = fixed:SGC\n"))


def test_window_validation(tmp_path):
    with pytest.raises(ConfigError, match="start_test_period"):
        load_config(write(tmp_path,
                          "T = 10\nstart_test_period = 8\n"
                          "end_test_period = 4\n"))
    with pytest.raises(ConfigError, match="start_test_period"):
        load_config(write(tmp_path, "T = 10\nstart_test_period = 0\n"
                                    "end_test_period = 4\n"))


def test_hyper_overrides_global_and_per_kind(tmp_path):
    cfg = load_config(write(
        tmp_path,
        "epochs = 17\nsgc.learning_rate = 0.123\nsage.dropout = 0.5\n"))
    assert cfg.hyper_for(BackboneKind.SGC).epochs == 17
    assert cfg.hyper_for(BackboneKind.SGC).learning_rate == 0.123
    assert cfg.hyper_for(BackboneKind.MLP).learning_rate == 0.01
    assert cfg.hyper_for(BackboneKind.SAGE).dropout == 0.5


def test_bad_values_reported(tmp_path):
    with pytest.raises(ConfigError, match="bad value"):
        load_config(write(tmp_path, "T = forty\n"))
    with pytest.raises(ConfigError, match="expected key"):
        load_config(write(tmp_path, "just some words\n"))
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(write(tmp_path, "sgc.unknown_field = 2\n"))


def test_k_values_validation(tmp_path):
    with pytest.raises(ConfigError, match="K values"):
        load_config(write(tmp_path, "K_values = 1,2\n"))


def test_env_seed_override(tmp_path, monkeypatch):
    cfg = load_config(write(tmp_path, "seeds = 1,2,3\n"))
    monkeypatch.setenv("DESOCIAL_SEED", "99")
    cfg = apply_env_overrides(cfg)
    assert cfg.seeds == (99,)


def test_config_roundtrip_dict(tmp_path):
    cfg = load_config(write(tmp_path, "pool = MLP,SGC\nn = 3\n"))
    blob = cfg.to_dict()
    assert blob["pool"] == ["MLP", "SGC"]
    assert blob["n"] == 3
    assert set(blob["hyper"]) == {"MLP", "SGC"}
