import pytest

from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.models.controller import ControllerKind, CrTable
from cv2x_dcc.schemas.run_config import RunConfig
from cv2x_dcc.services.presets import (
    apply_delta,
    desk_scale,
    expand_preset,
    get_preset,
    list_presets,
)


def test_presets_are_listed():
    names = [p.name for p in list_presets()]

    assert names == ["fig3", "fig4", "fig5", "cbr20", "cbr60", "table4", "table6"]


def test_reactive_preset_expands_with_grant_breaking_variant():
    configs = expand_preset(get_preset("fig3"), RunConfig())

    assert [c.label for c in configs] == [
        "NoDcc",
        "DCC Reactive (GB)",
        "DCC Reactive",
    ]
    assert configs[1].sbsps.grant_breaking
    assert not configs[2].sbsps.grant_breaking


def test_cbr20_set_uses_aggressive_tables():
    configs = {c.label: c for c in expand_preset(get_preset("cbr20"), RunConfig())}

    crlimit = configs["RRI CR Limit (Aggressive)"].controller
    assert crlimit.kind is ControllerKind.RRI_CR_LIMIT
    assert crlimit.cr_table is CrTable.AGGRESSIVE
    assert configs["DCC Adaptive (20%)"].controller.adaptive_target == 0.20


def test_combined_set_shares_no_dcc():
    labels = [c.label for c in expand_preset(get_preset("table4"), RunConfig())]

    assert len(labels) == len(set(labels)) == 8


def test_expansion_keeps_base_settings():
    base = RunConfig.model_validate({"scenario": {"density": 0.2}, "seeds": [7]})

    for config in expand_preset(get_preset("fig5"), base):
        assert config.scenario.density == 0.2
        assert config.seeds == [7]


def test_desk_scale():
    config = desk_scale(RunConfig())

    assert config.scenario.vehicle_count == 100
    assert config.scenario.sim_duration == 20_000
    assert config.scenario.warmup == 2_000
    assert config.seeds == [1, 2, 3, 4, 5]


def test_desk_scale_can_keep_the_road_density():
    config = desk_scale(RunConfig(), vehicles=None)

    assert config.scenario.vehicle_count == 276
    assert config.scenario.sim_duration == 20_000


def test_congested_presets_keep_the_road_density():
    desk = {p: get_preset(p).desk_vehicles for p in ("fig3", "fig5", "cbr20", "cbr60")}

    assert desk == {"fig3": 100, "fig5": 100, "cbr20": None, "cbr60": None}


def test_invalid_delta_names_the_field():
    with pytest.raises(ConfigurationError) as excinfo:
        apply_delta(RunConfig(), {"sbsps": {"t1": 0}})

    assert excinfo.value.field == "sbsps.t1"


def test_unknown_preset_lists_choices():
    with pytest.raises(ConfigurationError, match="fig3"):
        get_preset("nope")
