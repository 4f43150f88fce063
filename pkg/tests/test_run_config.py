import pytest

from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.models.controller import ControllerKind, CrTable
from cv2x_dcc.schemas.run_config import (
    ControllerConfig,
    RadioConfig,
    RunConfig,
    dump_config,
    load_config,
    parse_config,
)


def test_empty_document_gives_defaults():
    config = parse_config("")

    assert config == RunConfig()
    assert config.scenario.vehicle_count == 276
    assert config.radio.num_subchannels == 3
    assert config.sbsps.subchannels_per_tx == 2
    assert config.controller.kind is ControllerKind.NO_DCC
    assert config.seeds == [1]


def test_overrides_merge_with_defaults():
    config = parse_config(
        "scenario:\n"
        "  density: 0.2\n"
        "controller:\n"
        "  kind: RriCrLimit\n"
        "seeds: [1, 2]\n"
    )

    assert config.scenario.density == 0.2
    assert config.scenario.road_length == 600.0
    assert config.controller.kind is ControllerKind.RRI_CR_LIMIT
    assert config.seeds == [1, 2]


def test_unknown_key_reports_its_line():
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config("scenario:\n  road_lenght: 500\n")

    error = excinfo.value
    assert error.field == "scenario.road_lenght"
    assert error.line == 2
    assert str(error).startswith("line 2: scenario.road_lenght:")


def test_bad_value_reports_its_line():
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config("scenario:\n  road_length: 500\n  density: -1\n")

    assert excinfo.value.field == "scenario.density"
    assert excinfo.value.line == 3


def test_bad_enum_value():
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config("controller:\n  kind: Magic\n")

    assert excinfo.value.field == "controller.kind"
    assert excinfo.value.line == 2


def test_malformed_yaml():
    with pytest.raises(ConfigurationError, match="malformed YAML"):
        parse_config("scenario: [1, 2\n")


def test_top_level_must_be_a_mapping():
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config("- 1\n- 2\n")

    assert excinfo.value.line == 1


@pytest.mark.parametrize(
    "text",
    [
        "scenario:\n  warmup: 5000\n  sim_duration: 5000\n",
        "radio:\n  num_subchannels: 4\n",
        "sbsps:\n  subchannels_per_tx: 4\n",
        "sbsps:\n  t1: 50\n  t2: 20\n",
        "sbsps:\n  rrc_min: 10\n  rrc_max: 5\n",
        "sbsps:\n  default_rri: 150\n",
        "metrics:\n  awareness_ring: [300, 200]\n",
        "controller:\n  rate_min: 5\n  rate_max: 2\n",
        "seeds: []\n",
    ],
)
def test_inconsistent_values_are_rejected(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_dump_round_trips():
    config = parse_config(
        "controller:\n  kind: DropEtsi\n  etsi_priority: '3-5'\n"
        "metrics:\n  awareness_ring: [100, 250]\n"
    )

    assert parse_config(dump_config(config)) == config


def test_load_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("scenario:\n  density: 0.1\n", encoding="utf-8")

    assert load_config(path).scenario.density == 0.1


def test_shadowing_given_as_variance():
    assert RadioConfig(shadowing_sigma_los=3.0).shadowing_sigma == 3.0
    variance = RadioConfig(shadowing_sigma_los=9.0, shadowing_is_variance=True)
    assert variance.shadowing_sigma == pytest.approx(3.0)


@pytest.mark.parametrize(
    "kind, table",
    [
        (ControllerKind.DROP_ETSI, CrTable.ETSI),
        (ControllerKind.DROP_3GPP, CrTable.GPP3),
        (ControllerKind.DROP_AGGRESSIVE, CrTable.AGGRESSIVE),
        (ControllerKind.RRI_CR_LIMIT, CrTable.GPP3),
    ],
)
def test_default_cr_table_follows_kind(kind, table):
    assert ControllerConfig(kind=kind).cr_table is table


def test_explicit_cr_table_wins():
    config = ControllerConfig(kind=ControllerKind.RRI_CR_LIMIT, table="aggressive")

    assert config.cr_table is CrTable.AGGRESSIVE


def test_labels():
    reactive_gb = RunConfig.model_validate(
        {"controller": {"kind": "Reactive"}, "sbsps": {"grant_breaking": True}}
    )
    named = RunConfig(mechanism="Custom")

    assert RunConfig().label == "NoDcc"
    assert reactive_gb.label == "Reactive (GB)"
    assert named.label == "Custom"
