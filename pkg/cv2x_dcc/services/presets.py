import copy
import logging
from typing import Any

from pydantic import ValidationError

from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.schemas.presets import ExperimentPreset, PresetInfo
from cv2x_dcc.schemas.run_config import RunConfig

logger = logging.getLogger(__name__)

DESK_VEHICLES = 100
DESK_DURATION = 20_000
DESK_WARMUP = 2_000
DESK_SEEDS = [1, 2, 3, 4, 5]


def _variant(mechanism: str, kind: str, **blocks: dict[str, Any]) -> dict[str, Any]:
    controller = {"kind": kind, **blocks.pop("controller", {})}
    return {"mechanism": mechanism, "controller": controller, **blocks}


NO_DCC = _variant("NoDcc", "NoDcc")
REACTIVE = _variant("DCC Reactive", "Reactive")
REACTIVE_GB = _variant("DCC Reactive (GB)", "Reactive", sbsps={"grant_breaking": True})
ADAPTIVE_68 = _variant("DCC Adaptive (68%)", "Adaptive")
ADAPTIVE_20 = _variant(
    "DCC Adaptive (20%)", "Adaptive", controller={"adaptive_target": 0.20}
)
DROP_ETSI = _variant("Packet Dropping (ETSI)", "DropEtsi")
DROP_3GPP = _variant("Packet Dropping (3GPP)", "Drop3gpp")
DROP_AGGRESSIVE = _variant("Packet Dropping (Aggressive)", "DropAggressive")
RRI_LOOKUP = _variant("RRI Lookup", "RriLookup")
RRI_CR_LIMIT_AGGRESSIVE = _variant(
    "RRI CR Limit (Aggressive)", "RriCrLimit", controller={"table": "aggressive"}
)
RRI_CR_LIMIT_3GPP = _variant("RRI CR Limit (3GPP)", "RriCrLimit")

CBR20_SET = [
    NO_DCC,
    ADAPTIVE_20,
    REACTIVE,
    DROP_AGGRESSIVE,
    RRI_LOOKUP,
    RRI_CR_LIMIT_AGGRESSIVE,
]
CBR60_SET = [NO_DCC, ADAPTIVE_68, RRI_CR_LIMIT_3GPP]
# NoDcc is shared by both sets
COMBINED_SET = CBR20_SET + CBR60_SET[1:]

PRESETS: dict[str, ExperimentPreset] = {
    preset.name: preset
    for preset in (
        ExperimentPreset(
            name="fig3",
            description="Reactive DCC with and without grant breaking against no DCC",
            variants=[NO_DCC, REACTIVE_GB, REACTIVE],
        ),
        ExperimentPreset(
            name="fig4",
            description="Reactive and adaptive DCC; adaptive at 68% and 20% target CBR",
            variants=[NO_DCC, REACTIVE, ADAPTIVE_68, ADAPTIVE_20],
        ),
        ExperimentPreset(
            name="fig5",
            description="Packet dropping on the ETSI, 3GPP and aggressive CR tables",
            variants=[NO_DCC, DROP_ETSI, DROP_3GPP, DROP_AGGRESSIVE],
        ),
        ExperimentPreset(
            name="cbr20",
            description="Mechanisms tuned to a channel load near 20%",
            variants=CBR20_SET,
            desk_vehicles=None,
        ),
        ExperimentPreset(
            name="cbr60",
            description="Mechanisms letting the channel load settle near 60%",
            variants=CBR60_SET,
            desk_vehicles=None,
        ),
        ExperimentPreset(
            name="table4",
            description="Colliding grant taxonomy for the 20% and 60% sets",
            variants=COMBINED_SET,
            desk_vehicles=None,
        ),
        ExperimentPreset(
            name="table6",
            description="Neighbour awareness for the 20% and 60% sets",
            variants=COMBINED_SET,
            desk_vehicles=None,
        ),
    )
}


def list_presets() -> list[PresetInfo]:
    return [
        PresetInfo(
            name=preset.name,
            description=preset.description,
            mechanisms=[variant["mechanism"] for variant in preset.variants],
        )
        for preset in PRESETS.values()
    ]


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose one of {sorted(PRESETS)}", field="preset"
        ) from None


def _merge(base: dict[str, Any], delta: dict[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in delta.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_delta(base: RunConfig, delta: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(_merge(base.model_dump(mode="json"), delta))
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"]) or None
        raise ConfigurationError(error["msg"], field=field) from e


def expand_preset(preset: ExperimentPreset, base: RunConfig) -> list[RunConfig]:
    """One RunConfig per mechanism of the preset, on top of `base`."""
    configs = [apply_delta(base, variant) for variant in preset.variants]
    logger.info(
        "Preset %s expands to %d mechanisms: %s",
        preset.name,
        len(configs),
        ", ".join(c.label for c in configs),
    )
    return configs


def desk_scale(config: RunConfig, vehicles: int | None = DESK_VEHICLES) -> RunConfig:
    """Reduced run: 20 s, seeds 1..5 and `vehicles` on the same road.

    With `vehicles` None the configured density is kept, for experiments that
    need the congested road.
    """
    scenario: dict[str, Any] = {
        "sim_duration": DESK_DURATION,
        "warmup": DESK_WARMUP,
    }
    if vehicles is not None:
        scenario["density"] = vehicles / config.scenario.road_length
    return apply_delta(config, {"scenario": scenario, "seeds": DESK_SEEDS})

