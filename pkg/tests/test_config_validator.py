from pathlib import Path

import pytest
import yaml

from centrolab.errors import ConfigError
from centrolab.guardrails.config_validator import ConfigValidator, config_validator
from centrolab.models.schemas import EvalReport, ExperimentConfig

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def validate(text: str):
    return config_validator.validate_data(yaml.safe_load(text), text, "exp.yaml")


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIG_DIR.glob("*.yaml")))
def test_shipped_configs_validate(name):
    config = config_validator.load(CONFIG_DIR / name)
    assert isinstance(config, ExperimentConfig)
    assert config.methods


def test_default_config_grid():
    config = config_validator.load(CONFIG_DIR / "m4_default.yaml")
    assert config.dataset.n_modalities == 4
    assert "centrobind" in config.methods and "fabind:4" in config.methods
    assert len(config.seeds) == 5


@pytest.mark.parametrize(
    "typo, expected",
    [("centorbind", "centrobind"), ("fabnid:2", "fabind:2"), ("meidan", "median"), ("nnone", "none")],
)
def test_method_suggestions(typo, expected):
    is_valid, suggestion = config_validator.check_method(typo)
    assert not is_valid
    assert suggestion == expected


def test_valid_methods_pass():
    for method in ("none", "fabind:3", "centrobind", "wavg", "random", "random-intra", "median", "CentroBind"):
        assert config_validator.check_method(method) == (True, None)
    assert config_validator.check_method("fabind") == (False, "fabind:1")


def test_no_suggestion_for_unrelated_names():
    assert ConfigValidator().suggest("zzzzzz", ["centrobind", "median"]) is None


def test_anchor_flag_check():
    assert config_validator.check_anchor_flag("wavg:0.2,1") == (True, None)
    assert config_validator.check_anchor_flag("centriod") == (False, "centroid")


def test_unknown_method_reports_its_line():
    text = "name: t\nmethods:\n  - none\n  - centorbind\n"
    with pytest.raises(ConfigError) as info:
        validate(text)
    assert "exp.yaml:4: unknown method 'centorbind' (did you mean 'centrobind'?)" in str(info.value)


def test_misspelled_key_reports_line_and_suggestion():
    text = "name: t\nbind:\n  tau: 0.3\n  epoch: 3\n"
    with pytest.raises(ConfigError) as info:
        validate(text)
    message = str(info.value)
    assert message.startswith("exp.yaml:4: bind.epoch:")
    assert "did you mean 'epochs'" in message


def test_bad_value_reports_its_line():
    text = "name: t\ndataset:\n  n_modalities: 4\n  d_x: -3\n"
    with pytest.raises(ConfigError, match=r"exp.yaml:4: dataset.d_x"):
        validate(text)


def test_cross_field_rules():
    with pytest.raises(ConfigError, match="beyond M=3"):
        validate("name: t\ndataset:\n  n_modalities: 3\nmethods: [fabind:4]\n")
    with pytest.raises(ConfigError, match="wavg"):
        validate("name: t\nmethods: [wavg]\n")
    with pytest.raises(ConfigError, match="either fractions or qualities"):
        validate("name: t\ndataset:\n  n_modalities: 2\n  fractions: [0.5, 0.1]\n  qualities: [0.5, 0.9]\n")


def test_val_split_needs_validation_pairs():
    with pytest.raises(ConfigError, match="n_val is 0"):
        validate("name: t\ndataset:\n  n_val: 0\neval:\n  split: val\n")
    config = validate("name: t\ndataset:\n  n_val: 0\neval:\n  split: test\n")
    assert config.eval.split == "test"


def test_removed_fields_are_rejected():
    with pytest.raises(ConfigError, match="bind.seed"):
        validate("name: t\nbind:\n  seed: 3\n")
    assert "theory" not in EvalReport.model_fields


def test_wavg_takes_weights_from_qualities():
    config = validate("name: t\ndataset:\n  n_modalities: 2\n  qualities: [0.2, 1.0]\nmethods: [wavg]\n")
    assert config.dataset.qualities == [0.2, 1.0]


def test_line_index_covers_nested_keys_and_items():
    lines = ConfigValidator.line_index("a:\n  b: 1\n  c:\n    - x\n    - y\n")
    assert lines[("a",)] == 1
    assert lines[("a", "b")] == 2
    assert lines[("a", "c", 1)] == 5


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        config_validator.load(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: [unclosed\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        config_validator.load(bad)
    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("42\n")
    with pytest.raises(ConfigError, match="mapping"):
        config_validator.load(scalar)
