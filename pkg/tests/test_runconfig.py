import pytest

from fmqubo.errors import ValidationError
from fmqubo.runconfig import (
    build_anneal_config,
    build_train_config,
    config_hash,
    load_config_file,
    merge_overrides,
    parse_int_list,
    parse_number_list,
    scenario_train_defaults,
)


class TestLoadConfigFile:
    def test_sections_and_values(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("[run]\nscenario = 1\nseeds = 0:4\n"
                     "[train]\nrank = 6\n[anneal]\nnum_reads = 100\n")
        cfg = load_config_file(p)
        assert cfg["run"]["scenario"] == "1"
        assert cfg["train"]["rank"] == "6"
        assert cfg["anneal"]["num_reads"] == "100"

    def test_unknown_key_named_in_error(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("[train]\nrnak = 6\nepochs = 10\n")
        with pytest.raises(ValidationError, match="train.rnak"):
            load_config_file(p)

    def test_unknown_section_named_in_error(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("[solver]\nnum_reads = 5\n")
        with pytest.raises(ValidationError, match=r"\[solver\]"):
            load_config_file(p)

    def test_multiple_offenders_all_listed(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("[run]\nfoo = 1\n[anneal]\nbar = 2\n")
        with pytest.raises(ValidationError) as err:
            load_config_file(p)
        assert "run.foo" in str(err.value)
        assert "anneal.bar" in str(err.value)

    def test_malformed_ini(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("rank = 6\n")
        with pytest.raises(ValidationError):
            load_config_file(p)


class TestMergeOverrides:
    def test_flag_wins_over_file(self):
        merged = merge_overrides(
            {"train": {"rank": "6", "epochs": "10"}},
            {"train": {"rank": 12, "epochs": None}},
        )
        assert merged["train"]["rank"] == "12"
        assert merged["train"]["epochs"] == "10"

    def test_all_sections_present(self):
        merged = merge_overrides({}, {})
        assert set(merged) == {"run", "train", "anneal"}

    def test_unknown_override_rejected(self):
        with pytest.raises(ValidationError, match="train.momentum"):
            merge_overrides({}, {"train": {"momentum": 0.9}})


class TestBuildConfigs:
    def test_train_defaults(self):
        cfg = build_train_config({})
        assert cfg.rank == 8
        assert cfg.rank3 is None
        assert cfg.epochs == 500

    def test_train_values_converted(self):
        cfg = build_train_config({"rank": "4", "learning_rate": "0.05",
                                  "rank3": "3"})
        assert cfg.rank == 4
        assert cfg.learning_rate == 0.05
        assert cfg.rank3 == 3

    def test_train_bad_value(self):
        with pytest.raises(ValidationError, match="train.epochs"):
            build_train_config({"epochs": "many"})

    def test_anneal_defaults_and_auto_temperatures(self):
        cfg = build_anneal_config({"t_initial": "auto"})
        assert cfg.num_reads == 5000
        assert cfg.t_initial is None
        assert cfg.t_final is None

    def test_anneal_explicit_temperatures(self):
        cfg = build_anneal_config({"t_initial": "5.0", "t_final": "0.05"})
        assert cfg.t_initial == 5.0
        assert cfg.t_final == 0.05

    def test_scenario_presets_exist(self):
        assert scenario_train_defaults("1")["rank"] == "4"
        assert scenario_train_defaults("2")["rank"] == "8"
        assert scenario_train_defaults("synthetic") == {}


class TestParseLists:
    def test_comma_numbers(self):
        assert parse_number_list("1, 2.5, -3") == [1.0, 2.5, -3.0]

    def test_inclusive_range(self):
        assert parse_int_list("3:6") == [3, 4, 5, 6]

    def test_single_value(self):
        assert parse_int_list("7") == [7]

    def test_reversed_range_rejected(self):
        with pytest.raises(ValidationError):
            parse_number_list("6:3")

    def test_non_integer_rejected_for_int_list(self):
        with pytest.raises(ValidationError):
            parse_int_list("1,2.5")

    def test_garbage_rejected(self):
        with pytest.raises(ValidationError):
            parse_number_list("1,two,3")

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            parse_number_list("  ")


class TestConfigHash:
    def test_stable_across_insertion_order(self):
        a = config_hash({"run": {"scenario": "1", "seeds": "0:4"}})
        b = config_hash({"run": {"seeds": "0:4", "scenario": "1"}})
        assert a == b
        assert len(a) == 16

    def test_sensitive_to_values(self):
        a = config_hash({"train": {"rank": "4"}})
        b = config_hash({"train": {"rank": "5"}})
        assert a != b
