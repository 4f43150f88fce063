from dataclasses import dataclass
from enum import Enum


class ControllerKind(str, Enum):
    NO_DCC = "NoDcc"
    REACTIVE = "Reactive"
    ADAPTIVE = "Adaptive"
    DROP_ETSI = "DropEtsi"
    DROP_3GPP = "Drop3gpp"
    DROP_AGGRESSIVE = "DropAggressive"
    RRI_LOOKUP = "RriLookup"
    RRI_CR_LIMIT = "RriCrLimit"

    @property
    def is_rate_control(self) -> bool:
        return self in (ControllerKind.REACTIVE, ControllerKind.ADAPTIVE)

    @property
    def is_dropping(self) -> bool:
        return self in (
            ControllerKind.DROP_ETSI,
            ControllerKind.DROP_3GPP,
            ControllerKind.DROP_AGGRESSIVE,
        )

    @property
    def is_rri_adaptive(self) -> bool:
        return self in (ControllerKind.RRI_LOOKUP, ControllerKind.RRI_CR_LIMIT)


class CrTable(str, Enum):
    ETSI = "etsi"
    GPP3 = "gpp3"
    AGGRESSIVE = "aggressive"


class ReactiveState(str, Enum):
    RELAXED = "Relaxed"
    ACTIVE_1 = "Active1"
    ACTIVE_2 = "Active2"
    ACTIVE_3 = "Active3"
    RESTRICTIVE = "Restrictive"


class GateAction(str, Enum):
    TRANSMIT = "Transmit"
    DELAY = "Delay"
    DROP = "Drop"


@dataclass(frozen=True, slots=True)
class GateDecision:
    action: GateAction
    until: int | None = None


TRANSMIT = GateDecision(GateAction.TRANSMIT)
DROP = GateDecision(GateAction.DROP)


@dataclass(slots=True)
class ControllerState:
    kind: ControllerKind
    cbr: float = 0.0
    reactive_state: ReactiveState = ReactiveState.RELAXED
    t_off: float = 100.0
    adaptive_rate: float = 10.0
    current_rri: int = 100
    over_threshold_since: int | None = None
    under_threshold_since: int | None = None
    last_tx_time: int | None = None
    last_adaptive_update: int | None = None
