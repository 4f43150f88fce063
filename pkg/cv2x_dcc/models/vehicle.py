from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class VehicleState:
    """A vehicle on the ring road at t = 0.

    `position` is the longitudinal coordinate in [0, road_length) and `lateral`
    the lane's offset across the road; both in meters.
    """

    id: int
    lane: int
    position: float
    direction: int
    lateral: float
