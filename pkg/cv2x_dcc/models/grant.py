from dataclasses import dataclass, field
from enum import Enum

from cv2x_dcc.exceptions import ConfigurationError

# Resource reservation intervals a grant may carry, in ms
ALLOWED_RRIS: tuple[int, ...] = tuple(range(100, 1001, 100))


def validate_rri(rri: int) -> int:
    if rri not in ALLOWED_RRIS:
        raise ConfigurationError(
            f"RRI {rri} ms is not one of {list(ALLOWED_RRIS)}", field="rri"
        )
    return rri


class SelectionContext(str, Enum):
    HAD_FREE = "HadFreeCandidates"
    NO_FREE = "NoFreeCandidates"


class GrantAction(str, Enum):
    TRANSMIT = "transmit"
    MISSED = "missed"
    BREAK = "break"


class ExpiryAction(str, Enum):
    KEEP = "keep"
    RESELECT = "reselect"


@dataclass(frozen=True, slots=True)
class GrantBreakingPolicy:
    enabled: bool = False
    sl_reselect_after: int = 1


@dataclass(slots=True)
class Grant:
    """A semi-persistent reservation: one subframe offset repeated every `rri` ms.

    `rrc` counts the reserved opportunities left. `missed_at` keeps the
    subframes where the reservation was held but nothing went on air.
    """

    owner: int
    subframe_offset: int
    subchannel_start: int
    subchannel_width: int
    rri: int
    rrc: int
    created_at: int
    selection_context: SelectionContext
    next_opportunity: int
    grant_id: int = 0
    missed_at: list[int] = field(default_factory=list)
    consecutive_misses: int = 0
    retuned_at: int | None = None

    @property
    def subchannel_end(self) -> int:
        return self.subchannel_start + self.subchannel_width

    def overlaps(self, other: "Grant") -> bool:
        return (
            self.subchannel_start < other.subchannel_end
            and other.subchannel_start < self.subchannel_end
        )


@dataclass(frozen=True, slots=True)
class Sci:
    """Sidelink control information sent alongside every data transmission."""

    source: int
    tx_id: int
    sent_at: int
    announced_rri: int
    subchannel_start: int
    subchannel_width: int
    rrc_snapshot: int

    @property
    def subchannel_end(self) -> int:
        return self.subchannel_start + self.subchannel_width
