import logging

import numpy as np

from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.models.vehicle import VehicleState
from cv2x_dcc.schemas.run_config import ScenarioConfig

logger = logging.getLogger(__name__)


def validate_scenario(config: ScenarioConfig) -> None:
    """Reject a scenario whose density rounds to an empty road."""
    if config.vehicle_count < 1:
        raise ConfigurationError(
            "density x road_length places no vehicle", field="scenario.density"
        )


def lane_offset(lane: int, config: ScenarioConfig) -> float:
    """Lateral coordinate of a lane; the opposite carriageway sits one lane apart."""
    k = config.lanes_per_direction
    if lane < k:
        return lane * config.lane_width
    return (lane + 1) * config.lane_width


def _wrap(positions: np.ndarray, road_length: float) -> np.ndarray:
    wrapped = np.mod(positions, road_length)
    # np.mod can round a tiny negative up to exactly road_length
    return np.where(wrapped >= road_length, wrapped - road_length, wrapped)


def build_scenario(
    config: ScenarioConfig, rng: np.random.Generator | None = None
) -> list[VehicleState]:
    """Place vehicles on the ring road.

    Vehicles are split evenly across lanes (remainder to the first lanes) and
    spread uniformly along each lane with a random lane phase and a small
    per-vehicle jitter.

    Args:
        config: Scenario block of the run configuration.
        rng: Generator to draw placement from; seeded from `config.seed` if None.

    Returns:
        Vehicles ordered by lane then position index; `id` is the list index.

    Raises:
        ConfigurationError: if the scenario violates its own bounds.
    """
    validate_scenario(config)
    rng = rng if rng is not None else np.random.default_rng(config.seed)

    total = config.vehicle_count
    n_lanes = 2 * config.lanes_per_direction
    base, extra = divmod(total, n_lanes)

    vehicles: list[VehicleState] = []
    for lane in range(n_lanes):
        count = base + (1 if lane < extra else 0)
        if count == 0:
            continue
        spacing = config.road_length / count
        phase = rng.uniform(0.0, spacing)
        jitter = rng.uniform(-0.5, 0.5, size=count) * spacing * config.position_jitter
        raw = phase + np.arange(count) * spacing + jitter
        positions = _wrap(raw, config.road_length)
        direction = 1 if lane < config.lanes_per_direction else -1
        lateral = lane_offset(lane, config)
        for position in positions:
            vehicles.append(
                VehicleState(
                    id=len(vehicles),
                    lane=lane,
                    position=float(position),
                    direction=direction,
                    lateral=lateral,
                )
            )

    logger.debug(
        "Placed %d vehicles on %d lanes over %.0f m",
        len(vehicles),
        n_lanes,
        config.road_length,
    )
    return vehicles


def position_at(vehicle: VehicleState, t: float, config: ScenarioConfig) -> float:
    """Longitudinal position at `t` ms; the road wraps at road_length."""
    moved = vehicle.position + vehicle.direction * config.speed * t / 1000.0
    return float(_wrap(np.asarray(moved), config.road_length))


def positions_at(
    start: np.ndarray, direction: np.ndarray, t: float, config: ScenarioConfig
) -> np.ndarray:
    return _wrap(start + direction * config.speed * t / 1000.0, config.road_length)


def ring_distance(
    x_a: np.ndarray | float,
    y_a: np.ndarray | float,
    x_b: np.ndarray | float,
    y_b: np.ndarray | float,
    road_length: float,
) -> np.ndarray | float:
    """Euclidean distance with the longitudinal gap taken the short way round."""
    dx = np.abs(np.asarray(x_a) - np.asarray(x_b))
    dx = np.minimum(dx, road_length - dx)
    return np.hypot(dx, np.asarray(y_a) - np.asarray(y_b))


def pair_distance(
    a: VehicleState, b: VehicleState, t: float, config: ScenarioConfig
) -> float:
    return float(
        ring_distance(
            position_at(a, t, config),
            a.lateral,
            position_at(b, t, config),
            b.lateral,
            config.road_length,
        )
    )


def distance_matrix(
    x: np.ndarray, y: np.ndarray, road_length: float
) -> np.ndarray:
    return ring_distance(x[:, None], y[:, None], x[None, :], y[None, :], road_length)
