from src.config.config import Config


def test_defaults_without_file(tmp_path):
    config = Config(str(tmp_path / "absent.yaml"))
    assert config.get("enumeration.max_height") == 4
    assert config.get("output.image_name") == "image.wtah"
    assert config.get("ldp.tight_pumping_constant") is False
    assert config.get("no.such.key", "fallback") == "fallback"


def test_environment_overrides_file(tmp_path, monkeypatch):
    path = tmp_path / "config.yaml"
    path.write_text("tetris:\n  oracle_height: 5\nlinearize:\n  max_rules: 10\n", encoding="utf-8")
    monkeypatch.setenv("HOMREG_LINEARIZE_MAX_RULES", "20")
    monkeypatch.setenv("HOMREG_TIGHT_PUMPING_CONSTANT", "true")
    config = Config(str(path))
    assert config.get("tetris.oracle_height") == 5
    assert config.get("linearize.max_rules") == 20
    assert config.get("ldp.tight_pumping_constant") is True


def test_save_round_trip(tmp_path):
    path = tmp_path / "config.yaml"
    config = Config(str(path))
    config.config["enumeration"]["max_height"] = 6
    config.save()
    assert Config(str(path)).get("enumeration.max_height") == 6
