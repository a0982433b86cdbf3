import json

import pytest

from settings import DEFAULTS, OUTPUT_ENV_VAR, ConfigError, LabSettings, default_output_dir, validate


def test_defaults_without_file(tmp_path):
    settings = LabSettings(tmp_path)
    assert settings.settings == DEFAULTS
    assert settings.get("mu") == -12.0
    assert settings.get("missing", "fallback") == "fallback"


def test_set_persists_and_reloads(tmp_path):
    LabSettings(tmp_path).set("grid_step", 0.1)
    reloaded = LabSettings(tmp_path)
    assert reloaded.get("grid_step") == 0.1
    reloaded.reset_to_defaults()
    assert LabSettings(tmp_path).get("grid_step") == DEFAULTS["grid_step"]


def test_malformed_file_raises(tmp_path):
    (tmp_path / "settings.json").write_text("{not json")
    with pytest.raises(ConfigError):
        LabSettings(tmp_path)
    (tmp_path / "settings.json").write_text("[1, 2]")
    with pytest.raises(ConfigError):
        LabSettings(tmp_path)


def test_file_values_are_validated(tmp_path):
    (tmp_path / "settings.json").write_text(json.dumps({"majorana_square": 0.7}))
    with pytest.raises(ConfigError):
        LabSettings(tmp_path)


@pytest.mark.parametrize("settings", [
    {"unknown_key": 1},
    {"weight_floor": 0.0},
    {"winding_beta": -1.0},
    {"ensemble_policy": "median"},
    {"seed": 1.5},
    {"grid_step": "fast"},
])
def test_validate_rejects(settings):
    with pytest.raises(ConfigError):
        validate(settings)


def test_validate_coerces_types():
    checked = validate({"seed": 3.0, "mu": 5, "majorana_square": 1})
    assert checked == {"seed": 3, "mu": 5.0, "majorana_square": 1.0}
    assert isinstance(checked["seed"], int)


def test_resolved_precedence(tmp_path):
    (tmp_path / "settings.json").write_text(json.dumps({"mu": -6.0, "seed": 4}))
    resolved = LabSettings(tmp_path).resolved({"mu": 3.0, "seed": None})
    assert resolved["mu"] == 3.0
    assert resolved["seed"] == 4
    assert resolved["grid_step"] == DEFAULTS["grid_step"]


def test_default_output_dir(monkeypatch, tmp_path):
    monkeypatch.delenv(OUTPUT_ENV_VAR, raising=False)
    assert default_output_dir().name == "results"
    monkeypatch.setenv(OUTPUT_ENV_VAR, str(tmp_path))
    assert default_output_dir() == tmp_path
