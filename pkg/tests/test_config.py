import pytest

from cofield.cli import _simulation_years
from cofield.config import Settings, parse_config_file, parse_year_range


def test_parse_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment line\n"
        "publications = pubs.csv\n"
        "seed = 42   # trailing comment\n"
        "\n"
        "weekly_rule = linear\n"
    )
    mapping = parse_config_file(cfg)
    assert mapping == {
        "publications": "pubs.csv",
        "seed": "42",
        "weekly_rule": "linear",
    }


def test_parse_config_rejects_garbage(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("this is not a key value line\n")
    with pytest.raises(ValueError, match="key = value"):
        parse_config_file(cfg)


def test_settings_types_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "seed = 7\nsimulate_years = 3\nepsilon = 1e-4\nfigures = false\n"
        "protected_countries = NL, BE\ntraining_years = 2006-2007\n"
    )
    settings = Settings.load(cfg, seed=99)
    assert settings.seed == 99          # CLI override wins
    assert settings.simulate_years == 3
    assert settings.epsilon == 1e-4
    assert settings.figures is False
    assert settings.protected == frozenset({"NL", "BE"})
    assert settings.training_range == (2006, 2007)


def test_settings_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("not_a_real_option = 1\n")
    with pytest.raises(ValueError, match="not_a_real_option"):
        Settings.load(cfg)


def test_settings_requires_corpus_paths():
    with pytest.raises(ValueError, match="publications"):
        Settings().corpus_paths()


def test_year_range_parsing():
    assert parse_year_range("2006-2008") == (2006, 2008)
    assert parse_year_range("2009") == (2009, 2009)


def test_simulation_years_flag():
    settings = Settings()
    assert _simulation_years(settings, None) == settings.simulate_years
    assert _simulation_years(settings, "2") == 2
    assert _simulation_years(settings, "2009-2010") == 2
    assert _simulation_years(settings, "2006-2006") == 1
