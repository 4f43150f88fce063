import math
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.models.controller import ControllerKind, CrTable
from cv2x_dcc.models.grant import ALLOWED_RRIS

RB_BANDWIDTH_MHZ = 0.18


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ScenarioConfig(_Block):
    road_length: float = Field(600.0, gt=0)
    lanes_per_direction: int = Field(3, ge=1)
    lane_width: float = Field(3.5, gt=0)
    density: float = Field(0.46, gt=0)  # vehicles per meter of road
    speed: float = Field(50 / 3.6, ge=0)  # m/s
    sim_duration: int = Field(20_000, gt=0)  # ms
    warmup: int = Field(2_000, ge=0)  # ms
    seed: int = 1
    position_jitter: float = Field(0.25, ge=0, lt=1)  # fraction of lane spacing

    @model_validator(mode="after")
    def _warmup_inside_run(self):
        if self.warmup >= self.sim_duration:
            raise ValueError("warmup must be shorter than sim_duration")
        return self

    @property
    def vehicle_count(self) -> int:
        return int(round(self.density * self.road_length))


class RadioConfig(_Block):
    carrier_frequency: float = Field(5.9, gt=0)  # GHz
    bandwidth: float = Field(10.0, gt=0)  # MHz
    num_subchannels: int = Field(3, ge=1)
    rbs_per_subchannel: int = Field(16, ge=1)
    tx_power: float = 23.0  # dBm
    noise_figure: float = Field(9.0, ge=0)  # dB
    shadowing_sigma_los: float = Field(3.0, ge=0)  # dB
    shadowing_is_variance: bool = False
    antenna_height: float = Field(1.5, gt=1.0)  # m
    breakpoint_on_effective_height: bool = False
    min_distance: float = Field(3.0, gt=0)  # m
    mcs_index: int = Field(6, ge=0, le=28)
    sinr_threshold: float = 2.8  # dB
    srssi_threshold: float = -90.0  # dBm

    @model_validator(mode="after")
    def _subchannels_fit_bandwidth(self):
        for name in ("tx_power", "sinr_threshold", "srssi_threshold"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        used = self.num_subchannels * self.rbs_per_subchannel * RB_BANDWIDTH_MHZ
        if used > self.bandwidth + 1e-9:
            raise ValueError(
                f"{self.num_subchannels} subchannels of {self.rbs_per_subchannel} RBs "
                f"need {used:.2f} MHz, more than {self.bandwidth} MHz"
            )
        return self

    @property
    def shadowing_sigma(self) -> float:
        if self.shadowing_is_variance:
            return math.sqrt(self.shadowing_sigma_los)
        return self.shadowing_sigma_los


class SbSpsConfig(_Block):
    subchannels_per_tx: int = Field(2, ge=1)
    t1: int = Field(4, ge=1)
    t2: int = Field(100, ge=1)
    sensing_window: int = Field(1000, ge=100)
    candidate_fraction: float = Field(0.2, gt=0, le=1)
    rsrp_threshold: float = -126.0  # dBm
    rsrp_step: float = Field(3.0, gt=0)  # dB
    rrc_min: int = Field(5, ge=1)
    rrc_max: int = Field(15, ge=1)
    keep_probability: float = Field(0.0, ge=0, le=1)
    grant_breaking: bool = False
    sl_reselect_after: int = Field(1, ge=1)
    default_rri: int = 100

    @model_validator(mode="after")
    def _consistent_window(self):
        if self.t1 > self.t2:
            raise ValueError("t1 must not exceed t2")
        if self.rrc_min > self.rrc_max:
            raise ValueError("rrc_min must not exceed rrc_max")
        if self.default_rri not in ALLOWED_RRIS:
            raise ValueError(f"default_rri must be one of {list(ALLOWED_RRIS)}")
        if self.sensing_window % self.default_rri:
            raise ValueError("sensing_window must be a multiple of default_rri")
        return self


class ControllerConfig(_Block):
    kind: ControllerKind = ControllerKind.NO_DCC
    table: CrTable | None = None
    etsi_priority: Literal["1-2", "3-5", "6-8"] = "6-8"
    aggressive_shift: float = Field(0.45, ge=0, lt=1)
    cbr_sample_period: int = Field(100, gt=0)  # ms
    adaptive_target: float = Field(0.68, gt=0, le=1)
    adaptive_alpha: float = Field(0.1, gt=0, le=1)
    adaptive_gain: float = Field(50.0, gt=0)
    adaptive_epoch: int = Field(200, gt=0)  # ms
    rate_min: float = Field(1.0, gt=0)  # Hz
    rate_max: float = Field(10.0, gt=0)  # Hz
    hysteresis_up: int = Field(1000, ge=0)  # ms
    hysteresis_down: int = Field(5000, ge=0)  # ms

    @model_validator(mode="after")
    def _rate_bounds(self):
        if self.rate_min > self.rate_max:
            raise ValueError("rate_min must not exceed rate_max")
        return self

    @property
    def cr_table(self) -> CrTable:
        if self.table is not None:
            return self.table
        return {
            ControllerKind.DROP_ETSI: CrTable.ETSI,
            ControllerKind.DROP_AGGRESSIVE: CrTable.AGGRESSIVE,
        }.get(self.kind, CrTable.GPP3)


class TrafficConfig(_Block):
    packet_size: int = Field(190, gt=0)  # bytes
    generation_period: int = Field(100, gt=0)  # ms


class MetricsConfig(_Block):
    bin_width: float = Field(50.0, gt=0)  # m
    range_cap: float = Field(600.0, gt=0)  # m
    sample_period: int = Field(100, gt=0)  # ms
    awareness_ring: tuple[float, float] = (200.0, 300.0)
    cam_lifetime: int = Field(1000, gt=0)  # ms
    ipg_max_distance: float | None = None
    verify_meters: bool = False

    @model_validator(mode="after")
    def _ring_ordered(self):
        low, high = self.awareness_ring
        if not 0 <= low < high:
            raise ValueError("awareness_ring must be (low, high) with 0 <= low < high")
        return self


class RunConfig(_Block):
    mechanism: str | None = None
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    radio: RadioConfig = Field(default_factory=RadioConfig)
    sbsps: SbSpsConfig = Field(default_factory=SbSpsConfig)
    controller: ControllerConfig = Field(default_factory=ControllerConfig)
    traffic: TrafficConfig = Field(default_factory=TrafficConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    seeds: list[int] = Field(default_factory=lambda: [1], min_length=1)
    output_dir: str = "results"
    trace_grants: bool = False
    trace_channel: bool = False

    @model_validator(mode="after")
    def _cross_block(self):
        if self.sbsps.subchannels_per_tx > self.radio.num_subchannels:
            raise ValueError(
                "sbsps.subchannels_per_tx exceeds radio.num_subchannels"
            )
        return self

    @property
    def label(self) -> str:
        if self.mechanism:
            return self.mechanism
        label = self.controller.kind.value
        if self.sbsps.grant_breaking:
            label += " (GB)"
        return label


def _line_of(text: str, loc: tuple[Any, ...]) -> int | None:
    """Return the 1-based line of the deepest YAML key matching `loc`."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                if key_node.value == str(key):
                    line = key_node.start_mark.line + 1
                    node = value_node
                    break
            else:
                break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
            if key >= len(node.value):
                break
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def parse_config(text: str) -> RunConfig:
    """Parse a YAML run configuration.

    Args:
        text: YAML document with any of the scenario/radio/sbsps/controller/
            traffic/metrics blocks plus top-level seeds and output_dir.

    Returns:
        The validated RunConfig; absent keys take their defaults.

    Raises:
        ConfigurationError: malformed YAML, unknown keys or out-of-range values,
            with the offending field and line.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigurationError(f"malformed YAML: {e}", line=line) from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("top level must be a mapping", line=1)

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        loc = tuple(error["loc"])
        field = ".".join(str(part) for part in loc) or None
        line = _line_of(text, loc)
        raise ConfigurationError(error["msg"], field=field, line=line) from e


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
