from dataclasses import dataclass
from enum import Enum

from cv2x_dcc.models.grant import SelectionContext


class FailureCause(str, Enum):
    SINR = "Sinr"
    HALF_DUPLEX = "HalfDuplex"
    COLLISION = "Collision"


# Compact codes used in the columnar outcome log; 0 means decoded
FAILURE_CODES: dict[int, FailureCause] = {
    1: FailureCause.SINR,
    2: FailureCause.HALF_DUPLEX,
    3: FailureCause.COLLISION,
}


class CollisionCause(str, Enum):
    MT = "MT"
    NF = "NF"
    TSIM = "TSim"


@dataclass(frozen=True, slots=True)
class RxSample:
    rsrp: float
    rssi: float
    sinr: float
    decoded: bool


@dataclass(frozen=True, slots=True)
class TxRecord:
    tx_id: int
    source: int
    subframe: int
    subchannel_start: int
    subchannel_width: int
    position: float
    lateral: float
    announced_rri: int


@dataclass(frozen=True, slots=True)
class RxOutcome:
    tx_id: int
    source: int
    receiver: int
    subframe: int
    distance: float
    decoded: bool
    failure_cause: FailureCause | None = None


@dataclass(slots=True)
class CollidingGrantEvent:
    """Two live grants whose reservations landed on the same resource."""

    grant_a: int
    grant_b: int
    owner_a: int
    owner_b: int
    first_subframe: int
    cause: CollisionCause
    last_subframe: int
    recurrences: int = 1


@dataclass(frozen=True, slots=True)
class GrantEvent:
    """One line of the grant lifecycle trace."""

    time: int
    vehicle: int
    grant_id: int
    event: str
    rri: int
    rrc: int
    subchannel_start: int
    subchannel_width: int
    selection_context: SelectionContext
    tx_id: int | None = None
