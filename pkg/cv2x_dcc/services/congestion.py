import logging
import math

from cv2x_dcc.helpers.dcc_tables import (
    cr_limit,
    reactive_lookup,
    rri_crlimit_settle,
    rri_lookup_target,
)
from cv2x_dcc.models.controller import (
    DROP,
    TRANSMIT,
    ControllerKind,
    ControllerState,
    GateAction,
    GateDecision,
)
from cv2x_dcc.schemas.run_config import ControllerConfig, SbSpsConfig

logger = logging.getLogger(__name__)


def adaptive_update(
    state: ControllerState, cbr: float, config: ControllerConfig | None = None
) -> float:
    """One LIMERIC-style step of the adaptive transmit rate, in Hz."""
    config = config or ControllerConfig()
    rate = (1.0 - config.adaptive_alpha) * state.adaptive_rate
    rate += config.adaptive_gain * (config.adaptive_target - cbr)
    state.adaptive_rate = min(max(rate, config.rate_min), config.rate_max)
    return state.adaptive_rate


def hysteresis_step(
    state: ControllerState,
    desired_rri: int,
    now: int,
    up_delay: int = 1000,
    down_delay: int = 5000,
) -> int:
    """Move the controller RRI towards `desired_rri` once the request has held.

    Increases need `up_delay` ms of uninterrupted demand, decreases `down_delay`
    ms. Only one of the two timers is armed at a time.
    """
    current = state.current_rri
    if desired_rri > current:
        state.under_threshold_since = None
        if state.over_threshold_since is None:
            state.over_threshold_since = now
        if now - state.over_threshold_since >= up_delay:
            logger.debug("RRI %d -> %d at %d ms", current, desired_rri, now)
            state.current_rri = desired_rri
            state.over_threshold_since = None
    elif desired_rri < current:
        state.over_threshold_since = None
        if state.under_threshold_since is None:
            state.under_threshold_since = now
        if now - state.under_threshold_since >= down_delay:
            logger.debug("RRI %d -> %d at %d ms", current, desired_rri, now)
            state.current_rri = desired_rri
            state.under_threshold_since = None
    else:
        state.over_threshold_since = None
        state.under_threshold_since = None
    return state.current_rri


def gate_packet(
    state: ControllerState, now: int, cr: float = 0.0, limit: float | None = None
) -> GateDecision:
    """Decide what happens to a packet about to be released to the MAC.

    Args:
        state: Controller state of the transmitting vehicle.
        now: Current subframe (ms).
        cr: The vehicle's channel occupancy ratio right now.
        limit: CR limit for the current CBR; None means unlimited.

    Returns:
        Transmit, Delay(until) for rate controllers still inside T_off, or Drop
        for the dropping variants when the CR is above the limit.
    """
    kind = state.kind
    if kind.is_rate_control:
        if kind is ControllerKind.REACTIVE:
            t_off = state.t_off
        else:
            t_off = 1000.0 / state.adaptive_rate
        last = state.last_tx_time
        if last is not None and now - last < t_off:
            return GateDecision(GateAction.DELAY, until=math.ceil(last + t_off))
        return TRANSMIT
    if kind.is_dropping:
        if limit is not None and cr > limit:
            return DROP
        return TRANSMIT
    return TRANSMIT


class CongestionController:
    """Per-vehicle congestion control: turns CBR samples into gating and RRI."""

    def __init__(
        self,
        config: ControllerConfig,
        sbsps: SbSpsConfig,
        num_subchannels: int = 3,
    ):
        self.config = config
        self.sbsps = sbsps
        self.num_subchannels = num_subchannels
        self.state = ControllerState(
            kind=config.kind,
            adaptive_rate=config.rate_max,
            current_rri=sbsps.default_rri,
        )

    @property
    def kind(self) -> ControllerKind:
        return self.state.kind

    def desired_rri(self, cbr: float) -> int:
        if self.kind is ControllerKind.RRI_LOOKUP:
            return rri_lookup_target(cbr)
        return rri_crlimit_settle(
            cbr,
            self.state.current_rri,
            self.sbsps.subchannels_per_tx,
            self.num_subchannels,
            table=self.config.cr_table,
            priority=self.config.etsi_priority,
            aggressive_shift=self.config.aggressive_shift,
            default_rri=self.sbsps.default_rri,
        )

    def on_cbr_sample(self, cbr: float, now: int):
        state = self.state
        state.cbr = cbr
        if self.kind is ControllerKind.REACTIVE:
            state.reactive_state, state.t_off = reactive_lookup(cbr)
        elif self.kind is ControllerKind.ADAPTIVE:
            last = state.last_adaptive_update
            if last is None or now - last >= self.config.adaptive_epoch:
                adaptive_update(state, cbr, self.config)
                state.last_adaptive_update = now
        elif self.kind.is_rri_adaptive:
            hysteresis_step(
                state,
                self.desired_rri(cbr),
                now,
                self.config.hysteresis_up,
                self.config.hysteresis_down,
            )

    def current_limit(self) -> float | None:
        if not self.kind.is_dropping:
            return None
        return cr_limit(
            self.config.cr_table,
            self.state.cbr,
            self.config.etsi_priority,
            self.config.aggressive_shift,
        )

    def gate(self, now: int, cr: float = 0.0) -> GateDecision:
        return gate_packet(self.state, now, cr, self.current_limit())

    def on_transmit(self, now: int):
        self.state.last_tx_time = now
