import json
from pathlib import Path

import pytest

from qnetsched.config import (
    Catalog,
    ConfigError,
    ScenarioConfig,
    apply_overrides,
    config_from_mapping,
    load_config,
    with_changes,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_builtin_catalog_contents():
    catalog = Catalog.builtin()
    names = {a.name for a in catalog.applications}
    assert {"qkd-e91", "bqc-2", "bqc-6", "bqc-10", "teleportation"} <= names
    assert {f"purified-{n}" for n in ("qkd-e91", "bqc-2", "teleportation")} <= names
    assert {p.name for p in catalog.platforms} == {"nv", "trapped-ion"}
    assert sum(p.share for p in catalog.platforms) == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["dumbbell.json", "random_small.json"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / name)
    cfg.check()
    assert cfg.seeds


def test_defaults_round_trip_through_dict():
    cfg = ScenarioConfig()
    assert config_from_mapping(cfg.to_dict()) == cfg


def test_integer_seed_count_expands():
    assert config_from_mapping({"seeds": 3}).seeds == (0, 1, 2)


@pytest.mark.parametrize(
    "data, path",
    [
        ({"epsilon_service": 0}, "epsilon_service"),
        ({"epsilon_service": 1.5}, "epsilon_service"),
        ({"T_SI_seconds": -1}, "T_SI_seconds"),
        ({"horizon_intervals": 0}, "horizon_intervals"),
        ({"bonus_enabled": "yes"}, "bonus_enabled"),
        ({"fractions": {"interface": 1.2}}, "fractions.interface"),
        ({"fractions": {"bogus": 0.1}}, "fractions"),
        ({"topology": "random"}, "topology_params"),
        ({"topology": "no-such-file.json"}, "topology"),
        ({"mystery": 1}, "mystery"),
        ({"seeds": []}, "seeds"),
        ({"ramp_up_seconds": 0}, "ramp_up_seconds"),
        ({"catalog": {"applications": [], "platforms": [{"name": "x", "memory_lifetime": 1, "share": 0.5}]}},
         "catalog.platforms"),
    ],
)
def test_invalid_fields_name_their_path(data, path):
    with pytest.raises(ConfigError) as err:
        config_from_mapping(data)
    assert err.value.path == path


def test_bad_application_field_path():
    app = {
        "name": "x", "min_fidelity": 0.4, "pairs": 1, "window": 1.0, "minsep": 0.0, "n_inst": 1,
        "expiry_rel": 10.0, "resubmit_mean": 1.0, "platform_window_floor": 1.0,
    }
    data = {"applications": [app], "platforms": [{"name": "nv", "memory_lifetime": 1.0, "share": 1.0}]}
    with pytest.raises(ConfigError) as err:
        Catalog.from_mapping(data)
    assert err.value.path == "catalog.applications[0].min_fidelity"


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(broken)


def test_topology_file_resolves_relative_to_config(tmp_path):
    from qnetsched.network import dumbbell

    dumbbell().save(tmp_path / "topo.json")
    (tmp_path / "cfg.json").write_text(json.dumps({"topology": "topo.json"}))
    cfg = load_config(tmp_path / "cfg.json")
    assert Path(cfg.topology) == tmp_path / "topo.json"


def test_overrides_parse_values_and_nested_keys():
    cfg = apply_overrides(
        ScenarioConfig(), {"epsilon_service": "0.01", "bonus_enabled": "false", "fractions.junction": "0.3"}
    )
    assert cfg.epsilon_service == 0.01 and cfg.bonus_enabled is False
    assert cfg.fractions.junction == 0.3
    with pytest.raises(ConfigError):
        apply_overrides(ScenarioConfig(), {"nope": "1"})
    with pytest.raises(ConfigError):
        apply_overrides(ScenarioConfig(), {"epsilon_service.deep": "1"})


def test_with_changes_validates():
    assert with_changes(ScenarioConfig(), horizon_intervals=5).horizon_intervals == 5
    with pytest.raises(ConfigError):
        with_changes(ScenarioConfig(), horizon_intervals=0)
